//! Geometric row/column equilibration with power-of-two factors, so scaling
//! and unscaling are exact in floating point.

use super::LinearProgram;

pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

const PASSES: usize = 6;

fn pow2(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

impl Scaling {
    pub fn identity(m: usize, n: usize) -> Self {
        Scaling { row: vec![1.0; m], col: vec![1.0; n] }
    }

    pub fn compute(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_vars());
        let mut s = Scaling::identity(m, n);
        for _ in 0..PASSES {
            for (i, row) in lp.rows().iter().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &(j, a) in &row.terms {
                    let v = (a * s.col[j]).abs();
                    if v > 0.0 {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                if hi > 0.0 {
                    s.row[i] = pow2(1.0 / (lo * hi).sqrt());
                }
            }
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![0.0f64; n];
            for (i, row) in lp.rows().iter().enumerate() {
                for &(j, a) in &row.terms {
                    let v = (a * s.row[i]).abs();
                    if v > 0.0 {
                        lo[j] = lo[j].min(v);
                        hi[j] = hi[j].max(v);
                    }
                }
            }
            for j in 0..n {
                if hi[j] > 0.0 {
                    s.col[j] = pow2(1.0 / (lo[j] * hi[j]).sqrt());
                }
            }
        }
        s
    }
}

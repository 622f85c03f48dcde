//! Product-form basis inverse: the basis is the identity followed by a file of
//! column etas, one per replacement.

pub(crate) struct Eta {
    pos: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

#[derive(Default)]
pub(crate) struct EtaFile {
    etas: Vec<Eta>,
}

const DROP: f64 = 1e-14;

impl EtaFile {
    pub fn clear(&mut self) {
        self.etas.clear();
    }

    /// Records the replacement of position `pos` by a column whose
    /// transformed image is `alpha`.
    pub fn push(&mut self, pos: usize, alpha: &[f64]) {
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && a.abs() > DROP)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { pos, pivot: alpha[pos], others });
    }

    /// `v <- B^{-1} v`.
    pub fn ftran(&self, v: &mut [f64]) {
        for eta in &self.etas {
            let vr = v[eta.pos];
            if vr == 0.0 {
                continue;
            }
            let vr = vr / eta.pivot;
            v[eta.pos] = vr;
            for &(i, a) in &eta.others {
                v[i] -= a * vr;
            }
        }
    }

    /// `y^T <- y^T B^{-1}`.
    pub fn btran(&self, y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = y[eta.pos];
            for &(i, a) in &eta.others {
                s -= a * y[i];
            }
            y[eta.pos] = s / eta.pivot;
        }
    }
}

use super::{LinearProgram, LpSolution, RowKind};

/// Residuals of a reported optimum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DualityReport {
    /// Largest scaled row or bound violation of `x`.
    pub primal_residual: f64,
    /// Largest violation of dual feasibility or of `d = c - A^T y`.
    pub dual_residual: f64,
    /// `|c.x - dual objective|`.
    pub gap: f64,
    /// `gap / (1 + |c.x|)`.
    pub relative_gap: f64,
    /// Rows with both slack and dual numerically zero.
    pub degenerate_rows: Vec<usize>,
}

const ZERO: f64 = 1e-9;

impl DualityReport {
    pub fn accepted(&self, tol: f64) -> bool {
        self.primal_residual <= tol && self.dual_residual <= tol && self.relative_gap <= tol
    }
}

pub fn check_strong_duality(lp: &LinearProgram, sol: &LpSolution) -> DualityReport {
    let x = &sol.x;
    let y = &sol.row_duals;
    let mut rep = DualityReport::default();
    let activity = lp.row_activity(x);

    for (i, row) in lp.rows().iter().enumerate() {
        let slack = row.rhs - activity[i];
        let viol = match row.kind {
            RowKind::Eq => slack.abs(),
            RowKind::Le => (-slack).max(0.0),
            RowKind::Ge => slack.max(0.0),
        };
        rep.primal_residual = rep.primal_residual.max(viol / (1.0 + row.rhs.abs()));
        let sign_viol = match row.kind {
            RowKind::Eq => 0.0,
            RowKind::Le => (-y[i]).max(0.0),
            RowKind::Ge => y[i].max(0.0),
        };
        rep.dual_residual = rep.dual_residual.max(sign_viol);
        if slack.abs() <= ZERO && y[i].abs() <= ZERO {
            rep.degenerate_rows.push(i);
        }
    }

    let mut d = lp.cost().to_vec();
    for (i, row) in lp.rows().iter().enumerate() {
        for &(j, a) in &row.terms {
            d[j] -= a * y[i];
        }
    }
    let mut dual_obj: f64 = lp.rows().iter().zip(y).map(|(r, yi)| r.rhs * yi).sum();
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        let bound_viol = (lo - x[j]).max(x[j] - hi).max(0.0);
        rep.primal_residual = rep.primal_residual.max(bound_viol / (1.0 + x[j].abs()));
        rep.dual_residual = rep.dual_residual.max((sol.reduced_costs[j] - d[j]).abs());
        if d[j] > 0.0 {
            if hi.is_finite() {
                dual_obj += d[j] * hi;
            } else {
                rep.dual_residual = rep.dual_residual.max(d[j]);
            }
        } else if d[j] < 0.0 {
            if lo.is_finite() {
                dual_obj += d[j] * lo;
            } else {
                rep.dual_residual = rep.dual_residual.max(-d[j]);
            }
        }
    }
    let primal_obj = lp.objective_value(x);
    rep.gap = (primal_obj - dual_obj).abs();
    rep.relative_gap = rep.gap / (1.0 + primal_obj.abs());
    rep
}

//! Upper level: coalition profits, bid-grid best response, equilibrium
//! search, structure sweeps and demand-response statistics.

mod search;
mod sweep;

pub use search::{best_response_bids, solve_bilevel, EquilibriumRecord, Evaluator, GridSpec, KktAudit, Levels};
pub use sweep::{structure_sweep, sweep_structures, sweep_with, SweepRow, SweepTable};

use thiserror::Error;

use crate::clearing::{ClearingError, MarketOutcome};
use crate::devices::Player;
use crate::model::{CaseDefinition, CoalitionStructure};

#[derive(Debug, Error)]
pub enum CoalitionError {
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error("group {group} has {points} grid points; use coarser bid classes")]
    GridTooLarge { group: String, points: f64 },
    #[error("outcome was cleared for structure {outcome}, not {structure}")]
    Mismatch { outcome: String, structure: String },
}

/// Profit of every group of `structure` in one cleared scenario. Payments on
/// links between members of the same group are dropped.
pub fn coalition_profit(
    case: &CaseDefinition,
    structure: &CoalitionStructure,
    outcome: &MarketOutcome,
) -> Result<Vec<f64>, CoalitionError> {
    if outcome.structure != structure.label {
        return Err(CoalitionError::Mismatch { outcome: outcome.structure.clone(), structure: structure.label.clone() });
    }
    let group_of: Vec<Option<usize>> = (0..case.hmgs.len()).map(|i| structure.group_of(i)).collect();
    let mut out = vec![0.0; structure.groups().len()];
    for (v, &x) in outcome.problem.vars.iter().zip(&outcome.solution.x) {
        let hmgs: Vec<(usize, f64)> = v
            .profit
            .iter()
            .filter_map(|&(p, a)| match p {
                Player::Hmg(i) => Some((i, a)),
                Player::Retailer(_) => None,
            })
            .collect();
        let internal = hmgs.len() == 2 && group_of[hmgs[0].0] == group_of[hmgs[1].0];
        if internal {
            continue;
        }
        for (i, a) in hmgs {
            if let Some(g) = group_of[i] {
                out[g] += a * x;
            }
        }
    }
    Ok(out)
}

/// Load-shifting statistics of one H-MG over a full set of scenario outcomes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DrStats {
    /// Shifted energy over predicted energy, both scenario-weighted.
    pub shift_share: f64,
    /// Expected number of periods with net inflow of shifted load.
    pub dr_plus_periods: f64,
    /// Expected number of periods with net outflow.
    pub dr_minus_periods: f64,
}

pub fn dr_statistics(case: &CaseDefinition, outcomes: &[MarketOutcome], hmg: usize) -> DrStats {
    let h = &case.hmgs[hmg];
    let nt = case.periods();
    let mut s = DrStats::default();
    let mut predicted = 0.0;
    let mut shifted = 0.0;
    for o in outcomes {
        let rho = case.scenarios.weights[o.w];
        let mut net = vec![0.0; nt];
        for (v, &x) in o.problem.vars.iter().zip(&o.solution.x) {
            let prefix = format!("{}.DR.shift_to", h.id);
            let Some(rest) = v.name.strip_prefix(&prefix) else { continue };
            let dest: usize = rest.split('.').next().and_then(|d| d.parse().ok()).unwrap_or(0);
            let (Some(t), true) = (v.t, dest >= 1) else { continue };
            shifted += rho * x;
            net[t] -= x;
            net[dest - 1] += x;
        }
        predicted += rho * (0..nt).map(|t| h.load.at(t, o.w)).sum::<f64>();
        s.dr_plus_periods += rho * net.iter().filter(|&&v| v > 1e-9).count() as f64;
        s.dr_minus_periods += rho * net.iter().filter(|&&v| v < -1e-9).count() as f64;
    }
    s.shift_share = if predicted > 0.0 { shifted / predicted } else { 0.0 };
    s
}

//! Lower-level market clearing: LP assembly, solve, prices and profits.

mod assemble;
mod conservation;
mod precheck;
mod profit;

pub use assemble::{assemble_clearing_lp, balance_name, ClearingProblem};
pub use conservation::{conservation, Conservation};
pub use profit::{compute_player_profit, expected_profit, profit_breakdown, ProfitBreakdown};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::devices::{BidViolation, Carrier, DeviceError, Player};
use crate::kkt::{assert_kkt, KktOptions, KktReport};
use crate::lp::{check_strong_duality, solve_lp_from, Basis, DualityReport, LpError, LpSolution, SolverOptions, Status};
use crate::model::{CaseDefinition, CoalitionStructure};

#[derive(Debug, Error)]
pub enum ClearingError {
    #[error("bid out of bounds: hmg {} device {} t={} w={} value {}", .0.hmg, .0.device, .0.t + 1, .0.w + 1, .0.value)]
    BidOutOfBounds(BidViolation),
    #[error("{balance} balance of {hmg} at t={t}, w={w} cannot be served")]
    Unservable { hmg: String, balance: &'static str, t: usize, w: usize },
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("clearing {status} for structure {structure}, scenario {w}")]
    NotOptimal { status: Status, structure: String, w: usize },
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
}

impl ClearingError {
    /// Infeasible or unbounded markets, as opposed to malformed input or
    /// solver trouble.
    pub fn is_market_failure(&self) -> bool {
        matches!(self, ClearingError::Unservable { .. } | ClearingError::NotOptimal { .. })
    }
}

/// Result of clearing one scenario.
#[derive(Clone, Debug)]
pub struct MarketOutcome {
    pub structure: String,
    pub w: usize,
    pub objective: f64,
    /// Load-weighted mean of the per-H-MG balance duals, per period.
    pub mcp_e: Vec<f64>,
    pub mcp_h: Vec<f64>,
    /// Per-H-MG balance duals `[hmg][t]`.
    pub lambda_e: Vec<Vec<f64>>,
    pub lambda_h: Vec<Vec<f64>>,
    /// Per period: some balance row has both slack and dual at zero.
    pub degenerate: Vec<bool>,
    pub profits: BTreeMap<Player, f64>,
    pub problem: ClearingProblem,
    pub solution: LpSolution,
    pub duality: DualityReport,
    pub kkt: Option<KktReport>,
}

impl MarketOutcome {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.problem.col(name).map(|j| self.solution.x[j])
    }
}

#[derive(Clone, Debug)]
pub struct ClearOptions {
    pub verify: bool,
    pub kkt: KktOptions,
    pub solver: SolverOptions,
}

impl ClearOptions {
    pub fn from_case(case: &CaseDefinition) -> Self {
        ClearOptions { verify: true, kkt: KktOptions::from_case(case), solver: SolverOptions::default() }
    }
}

pub fn clear_market(
    case: &CaseDefinition,
    structure: &CoalitionStructure,
    bids: &crate::devices::BidVector,
    w: usize,
) -> Result<MarketOutcome, ClearingError> {
    clear_market_with(case, structure, bids, w, None, &ClearOptions::from_case(case))
}

/// As [`clear_market`], starting the solver from `warm` when given.
pub fn clear_market_with(
    case: &CaseDefinition,
    structure: &CoalitionStructure,
    bids: &crate::devices::BidVector,
    w: usize,
    warm: Option<&Basis>,
    opts: &ClearOptions,
) -> Result<MarketOutcome, ClearingError> {
    let problem = assemble_clearing_lp(case, structure, bids, w)?;
    let solution = solve_lp_from(&problem.lp, warm, &opts.solver)?;
    if solution.status != Status::Optimal {
        return Err(ClearingError::NotOptimal { status: solution.status, structure: structure.label.clone(), w: w + 1 });
    }
    Ok(finish_outcome(case, problem, solution, opts))
}

fn finish_outcome(case: &CaseDefinition, problem: ClearingProblem, solution: LpSolution, opts: &ClearOptions) -> MarketOutcome {
    let (n, nt, w) = (case.hmgs.len(), case.periods(), problem.w);
    let duality = check_strong_duality(&problem.lp, &solution);
    let mut lambda_e = vec![vec![0.0; nt]; n];
    let mut lambda_h = vec![vec![0.0; nt]; n];
    let mut degenerate = vec![false; nt];
    for i in 0..n {
        for t in 0..nt {
            let re = problem.balance_row(Carrier::Electric, i, t);
            let rh = problem.balance_row(Carrier::Thermal, i, t);
            lambda_e[i][t] = solution.row_duals[re];
            lambda_h[i][t] = solution.row_duals[rh];
            degenerate[t] |= duality.degenerate_rows.binary_search(&re).is_ok() || duality.degenerate_rows.binary_search(&rh).is_ok();
        }
    }
    let weighted = |lam: &Vec<Vec<f64>>, load: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..nt)
            .map(|t| {
                let total: f64 = (0..n).map(|i| load(i, t)).sum();
                if total > 1e-12 {
                    (0..n).map(|i| load(i, t) * lam[i][t]).sum::<f64>() / total
                } else {
                    (0..n).map(|i| lam[i][t]).sum::<f64>() / n as f64
                }
            })
            .collect()
    };
    let demand = |i: usize, t: usize| {
        problem
            .col(&crate::devices::var_name(&case.hmgs[i].id, "DR", "load", t + 1, w))
            .map_or(0.0, |j| solution.x[j].max(0.0))
    };
    let mcp_e = weighted(&lambda_e, &demand);
    let mcp_h = weighted(&lambda_h, &|i, t| case.hmgs[i].heat_load.at(t, w));
    let mut profits = BTreeMap::new();
    for i in 0..n {
        profits.insert(Player::Hmg(i), 0.0);
    }
    for k in 0..case.retailers.len() {
        profits.insert(Player::Retailer(k), 0.0);
    }
    for (v, &x) in problem.vars.iter().zip(&solution.x) {
        for &(p, a) in &v.profit {
            *profits.get_mut(&p).expect("registered player") += a * x;
        }
    }
    if cfg!(debug_assertions) {
        let c = conservation(case, &problem, &solution);
        assert!(c.max() <= 1e-9, "conservation violated in {} w={}: {c:?}", problem.structure, w + 1);
    }
    let kkt = opts.verify.then(|| assert_kkt(case, &problem, &solution, &opts.kkt));
    MarketOutcome {
        structure: problem.structure.clone(),
        w,
        objective: solution.objective,
        mcp_e,
        mcp_h,
        lambda_e,
        lambda_h,
        degenerate,
        profits,
        problem,
        solution,
        duality,
        kkt,
    }
}

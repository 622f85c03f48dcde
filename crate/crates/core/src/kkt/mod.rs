//! Independent first-order verification of a clearing solution.
//!
//! Every condition is rebuilt from the case data and the bids, reading primal
//! values and multipliers by registry name; nothing is taken from the LP
//! matrix. Bound multipliers are the positive and negative parts of the
//! reported reduced costs.

mod complementarity;
mod stationarity;

pub use complementarity::{complementarity_residuals, primal_residuals};
pub use stationarity::stationarity_residuals;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::clearing::{balance_name, ClearingProblem};
use crate::devices::{var_name, Carrier};
use crate::lp::{LpSolution, Status};
use crate::model::CaseDefinition;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum KktError {
    #[error("missing multiplier `{0}`")]
    MissingMultiplier(String),
    #[error("missing variable `{0}`")]
    MissingVariable(String),
}

#[derive(Clone, Debug)]
pub struct KktOptions {
    pub tol_s: f64,
    pub tol_c: f64,
    /// Pair the demand multiplier with the thermal price.
    pub demand_thermal_pairing: bool,
}

impl KktOptions {
    pub fn from_case(case: &CaseDefinition) -> Self {
        KktOptions {
            tol_s: case.tolerances.stationarity,
            tol_c: case.tolerances.complementarity,
            demand_thermal_pairing: case.options.demand_thermal_pairing,
        }
    }
}

impl Default for KktOptions {
    fn default() -> Self {
        KktOptions { tol_s: 1e-6, tol_c: 1e-6, demand_thermal_pairing: false }
    }
}

/// One evaluated condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub id: &'static str,
    /// Registry name of the variable or row the condition belongs to.
    pub index: String,
    pub value: f64,
}

/// Worst residual of one condition family.
#[derive(Clone, Debug, PartialEq)]
pub struct WorstResidual {
    pub id: &'static str,
    pub index: String,
    pub value: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KktReport {
    /// Set when the report could not be evaluated.
    pub note: Option<String>,
    pub stationarity: Vec<WorstResidual>,
    pub complementarity: Vec<WorstResidual>,
    pub primal: Vec<WorstResidual>,
    pub tol_s: f64,
    pub tol_c: f64,
    pub pass: bool,
}

impl KktReport {
    pub fn max_stationarity(&self) -> f64 {
        self.stationarity.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn max_complementarity(&self) -> f64 {
        self.complementarity.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn max_primal(&self) -> f64 {
        self.primal.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    /// Worst offender over all families.
    pub fn worst(&self) -> Option<&WorstResidual> {
        self.stationarity
            .iter()
            .chain(&self.complementarity)
            .chain(&self.primal)
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn summarize(rs: &[Residual]) -> Vec<WorstResidual> {
    let mut m: BTreeMap<&'static str, WorstResidual> = BTreeMap::new();
    for r in rs {
        let e = m.entry(r.id).or_insert_with(|| WorstResidual { id: r.id, index: r.index.clone(), value: r.value, count: 0 });
        e.count += 1;
        if r.value > e.value || r.value.is_nan() {
            e.value = r.value;
            e.index.clone_from(&r.index);
        }
    }
    m.into_values().collect()
}

pub fn assert_kkt(case: &CaseDefinition, problem: &ClearingProblem, sol: &LpSolution, opts: &KktOptions) -> KktReport {
    let mut rep = KktReport { tol_s: opts.tol_s, tol_c: opts.tol_c, ..Default::default() };
    if sol.status != Status::Optimal {
        rep.note = Some(format!("solution status is {}; no multipliers to verify", sol.status));
        return rep;
    }
    let all = stationarity_residuals(case, problem, sol, opts).and_then(|s| {
        let c = complementarity_residuals(case, problem, sol)?;
        let p = primal_residuals(case, problem, sol)?;
        Ok((s, c, p))
    });
    match all {
        Ok((s, c, p)) => {
            rep.stationarity = summarize(&s);
            rep.complementarity = summarize(&c);
            rep.primal = summarize(&p);
            let ok = |v: f64, tol: f64| v <= tol;
            rep.pass = rep.stationarity.iter().all(|r| ok(r.value, opts.tol_s))
                && rep.primal.iter().all(|r| ok(r.value, opts.tol_s))
                && rep.complementarity.iter().all(|r| ok(r.value, opts.tol_c));
        }
        Err(e) => rep.note = Some(e.to_string()),
    }
    rep
}

/// Name-based access to one solution.
pub(crate) struct Ctx<'a> {
    pub case: &'a CaseDefinition,
    pub p: &'a ClearingProblem,
    pub sol: &'a LpSolution,
    pub w: usize,
}

impl<'a> Ctx<'a> {
    pub fn new(case: &'a CaseDefinition, p: &'a ClearingProblem, sol: &'a LpSolution) -> Self {
        Ctx { case, p, sol, w: p.w }
    }

    pub fn name(&self, i: usize, dev: &str, role: &str, t: usize) -> String {
        var_name(&self.case.hmgs[i].id, dev, role, t, self.w)
    }

    pub fn x(&self, name: &str) -> Result<f64, KktError> {
        self.p.col(name).map(|j| self.sol.x[j]).ok_or_else(|| KktError::MissingVariable(name.to_string()))
    }

    /// `(lower, upper)` bound multipliers of a column.
    pub fn mu(&self, name: &str) -> Result<(f64, f64), KktError> {
        let j = self.p.col(name).ok_or_else(|| KktError::MissingVariable(name.to_string()))?;
        Ok((self.sol.lower_dual(j), self.sol.upper_dual(j)))
    }

    pub fn y(&self, name: &str) -> Result<f64, KktError> {
        self.p.row(name).map(|r| self.sol.row_duals[r]).ok_or_else(|| KktError::MissingMultiplier(name.to_string()))
    }

    pub fn y_opt(&self, name: &str) -> f64 {
        self.p.row(name).map_or(0.0, |r| self.sol.row_duals[r])
    }

    pub fn lambda(&self, i: usize, c: Carrier, t: usize) -> Result<f64, KktError> {
        self.y(&balance_name(&self.case.hmgs[i].id, c, t, self.w))
    }

    pub fn forecast(&self, t: usize) -> f64 {
        self.case.scenarios.mcp_forecast.at(t, self.w)
    }
}

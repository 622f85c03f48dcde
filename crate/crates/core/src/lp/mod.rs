//! Sparse linear programs and a bounded-variable revised simplex solver.
//!
//! Problems are always maximizations. Every solve reports row duals with the
//! convention `dual = d(objective)/d(rhs)`, so `<=` rows carry nonnegative
//! duals, `>=` rows nonpositive ones and equality rows are free.

mod basis;
mod dump;
mod duality;
mod scaling;
mod simplex;

pub use dump::{read_dump, write_dump};
pub use duality::{check_strong_duality, DualityReport};
pub use simplex::{solve_lp, solve_lp_from, SolverOptions};

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RowKind {
    Eq,
    Le,
    Ge,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Eq => "E",
            RowKind::Le => "L",
            RowKind::Ge => "G",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("row `{row}` references unregistered column {col}")]
    UnknownColumn { row: String, col: usize },
    #[error("row `{0}` has a non-finite coefficient or rhs")]
    NonFiniteRow(String),
    #[error("column `{0}` has invalid bounds or cost")]
    BadColumn(String),
    #[error("numerical failure after {iterations} iterations: {reason}")]
    NumericalFailure { iterations: usize, reason: String },
}

/// A maximization problem over bounded columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    col_names: Vec<String>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a column with finite lower bound. `upper` may be `f64::INFINITY`.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        assert!(lower.is_finite(), "use add_free_var for columns unbounded below");
        self.push_col(name.into(), lower, upper, cost)
    }

    /// Adds a column unbounded in both directions.
    pub fn add_free_var(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.push_col(name.into(), f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    fn push_col(&mut self, name: String, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.col_names.push(name);
        self.cost.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        kind: RowKind,
        rhs: f64,
    ) -> usize {
        self.rows.push(Constraint { name: name.into(), terms, kind, rhs });
        self.rows.len() - 1
    }

    pub fn set_cost(&mut self, col: usize, cost: f64) {
        self.cost[col] = cost;
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.lower[col] = lower;
        self.upper[col] = upper;
    }

    pub fn set_rhs(&mut self, row: usize, rhs: f64) {
        self.rows[row].rhs = rhs;
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    /// Checks the structural invariants a solve relies on.
    pub fn validate(&self) -> Result<(), LpError> {
        for j in 0..self.num_vars() {
            let (lo, hi, c) = (self.lower[j], self.upper[j], self.cost[j]);
            if lo.is_nan() || hi.is_nan() || !c.is_finite() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::BadColumn(self.col_names[j].clone()));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFiniteRow(row.name.clone()));
            }
            for &(col, a) in &row.terms {
                if col >= self.num_vars() {
                    return Err(LpError::UnknownColumn { row: row.name.clone(), col });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFiniteRow(row.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Row activity `a_i . x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.terms.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
        })
    }
}

/// Where a column sits relative to the basis at termination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Zero,
}

/// Basis snapshot over structural columns followed by one slack per row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Basis {
    pub states: Vec<ColState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub row_duals: Vec<f64>,
    /// `c_j - a_j . y`; positive at an upper bound, negative at a lower bound.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Multiplier of the upper bound of column `j` (nonnegative).
    pub fn upper_dual(&self, j: usize) -> f64 {
        self.reduced_costs[j].max(0.0)
    }

    /// Multiplier of the lower bound of column `j` (nonnegative).
    pub fn lower_dual(&self, j: usize) -> f64 {
        (-self.reduced_costs[j]).max(0.0)
    }
}

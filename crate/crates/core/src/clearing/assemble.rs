use std::collections::HashMap;

use super::ClearingError;
use crate::devices::{
    bid_bounds, build_conversion_block, build_dr_block, build_exchange_block, build_generation_block,
    build_storage_block, BidVector, Carrier, ConstraintBlock, VarDef,
};
use crate::lp::{LinearProgram, RowKind};
use crate::model::{CaseDefinition, CoalitionStructure, DeviceKind};

/// The clearing LP of one scenario with its variable registry.
#[derive(Clone, Debug)]
pub struct ClearingProblem {
    pub lp: LinearProgram,
    /// One entry per LP column.
    pub vars: Vec<VarDef>,
    /// Multiplier tag per LP row.
    pub row_tags: Vec<&'static str>,
    pub w: usize,
    pub structure: String,
    pub bids: BidVector,
    /// `[carrier][hmg][t]` -> row index.
    balance: [Vec<Vec<usize>>; 2],
    cols: HashMap<String, usize>,
    rows: HashMap<String, usize>,
}

fn ci(c: Carrier) -> usize {
    match c {
        Carrier::Electric => 0,
        Carrier::Thermal => 1,
    }
}

impl ClearingProblem {
    pub fn col(&self, name: &str) -> Option<usize> {
        self.cols.get(name).copied()
    }

    pub fn row(&self, name: &str) -> Option<usize> {
        self.rows.get(name).copied()
    }

    pub fn balance_row(&self, carrier: Carrier, hmg: usize, t: usize) -> usize {
        self.balance[ci(carrier)][hmg][t]
    }

    pub fn num_hmgs(&self) -> usize {
        self.balance[0].len()
    }
}

pub fn balance_name(hmg: &str, carrier: Carrier, t: usize, w: usize) -> String {
    let tag = match carrier {
        Carrier::Electric => "lambda_e",
        Carrier::Thermal => "lambda_h",
    };
    format!("{hmg}.bal.{tag}.{}.{}", t + 1, w + 1)
}

/// Builds the clearing LP of scenario `w`: every H-MG's demand response,
/// devices and exchanges, coupled by one electrical and one thermal balance
/// row per H-MG and period.
pub fn assemble_clearing_lp(
    case: &CaseDefinition,
    structure: &CoalitionStructure,
    bids: &BidVector,
    w: usize,
) -> Result<ClearingProblem, ClearingError> {
    if let Some(v) = bid_bounds(case, bids).into_iter().next() {
        return Err(ClearingError::BidOutOfBounds(v));
    }
    super::precheck::check(case, w)?;
    let mut blocks: Vec<ConstraintBlock> = Vec::new();
    for (i, h) in case.hmgs.iter().enumerate() {
        blocks.push(build_dr_block(case, i, w)?);
        for (j, d) in h.devices.iter().enumerate() {
            let b = match d.kind() {
                DeviceKind::ES | DeviceKind::TES => build_storage_block(case, i, j, bids, w)?,
                DeviceKind::EB | DeviceKind::EHP => build_conversion_block(case, i, j, bids, w)?,
                _ => build_generation_block(case, i, j, bids, w)?,
            };
            blocks.push(b);
        }
        blocks.push(build_exchange_block(case, i, w));
    }

    let mut lp = LinearProgram::new();
    let mut vars = Vec::new();
    let mut row_tags = Vec::new();
    for b in blocks {
        let off = lp.num_vars();
        for v in &b.vars {
            let j = lp.add_free_var(v.name.clone(), v.cost);
            lp.set_bounds(j, v.lo, v.hi);
        }
        for r in b.rows {
            let terms = r.terms.iter().map(|&(k, a)| (k + off, a)).collect();
            lp.add_row(r.name, terms, r.kind, r.rhs);
            row_tags.push(r.tag);
        }
        vars.extend(b.vars);
    }

    let (n, nt) = (case.hmgs.len(), case.periods());
    let mut terms: [Vec<Vec<Vec<(usize, f64)>>>; 2] = [vec![vec![Vec::new(); nt]; n], vec![vec![Vec::new(); nt]; n]];
    for (j, v) in vars.iter().enumerate() {
        if let Some(t) = v.t {
            for &(c, i, a) in &v.balance {
                terms[ci(c)][i][t].push((j, a));
            }
        }
    }
    let mut balance: [Vec<Vec<usize>>; 2] = [vec![vec![0; nt]; n], vec![vec![0; nt]; n]];
    for c in [Carrier::Electric, Carrier::Thermal] {
        for i in 0..n {
            for t in 0..nt {
                let rhs = match c {
                    Carrier::Electric => 0.0,
                    Carrier::Thermal => -case.hmgs[i].heat_load.at(t, w),
                };
                let name = balance_name(&case.hmgs[i].id, c, t, w);
                let tag = if c == Carrier::Electric { "lambda_e" } else { "lambda_h" };
                balance[ci(c)][i][t] = lp.add_row(name, std::mem::take(&mut terms[ci(c)][i][t]), RowKind::Eq, rhs);
                row_tags.push(tag);
            }
        }
    }

    let cols = vars.iter().enumerate().map(|(j, v)| (v.name.clone(), j)).collect();
    let rows = lp.rows().iter().enumerate().map(|(i, r)| (r.name.clone(), i)).collect();
    Ok(ClearingProblem {
        lp,
        vars,
        row_tags,
        w,
        structure: structure.label.clone(),
        bids: bids.clone(),
        balance,
        cols,
        rows,
    })
}

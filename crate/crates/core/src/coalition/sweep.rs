use rayon::prelude::*;

use super::{dr_statistics, solve_bilevel, CoalitionError, DrStats, EquilibriumRecord, Evaluator};
use crate::model::{enumerate_structures, CoalitionStructure, StructureMode, ValidatedCase};

/// One H-MG under one structure.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub structure: String,
    pub hmg: String,
    pub expected_income: f64,
    /// Mean over periods and scenarios of the cleared prices.
    pub avg_mcp_e: f64,
    pub avg_mcp_h: f64,
    pub equilibrium: bool,
    pub deviation_margin: f64,
    /// Bid fractions chosen by the H-MG's group, electrical then thermal per class.
    pub bid_fractions: Vec<f64>,
    /// This structure gives the H-MG its highest income of the sweep.
    pub best_structure: bool,
    pub dr: DrStats,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub records: Vec<EquilibriumRecord>,
    /// LP solves spent on the search, excluding verification.
    pub clears: usize,
}

impl SweepTable {
    pub fn income(&self, structure: &str, hmg: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.structure == structure && r.hmg == hmg).map(|r| r.expected_income)
    }
}

/// Equilibrium search over every structure of `mode`, sorted by label.
pub fn structure_sweep(case: &ValidatedCase, mode: StructureMode, levels: usize) -> Result<SweepTable, CoalitionError> {
    sweep_structures(case, &enumerate_structures(case, mode), levels)
}

/// Equilibrium search over the given structures, in the given order.
pub fn sweep_structures(case: &ValidatedCase, structures: &[CoalitionStructure], levels: usize) -> Result<SweepTable, CoalitionError> {
    sweep_with(&Evaluator::new(case, levels)?, structures)
}

/// Equilibrium search over `structures` sharing one evaluator.
pub fn sweep_with(ev: &Evaluator, structures: &[CoalitionStructure]) -> Result<SweepTable, CoalitionError> {
    let case = ev.case;
    let records: Vec<EquilibriumRecord> = structures
        .par_iter()
        .map(|s| solve_bilevel(ev, s, case.max_rounds))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for r in &records {
        let nt = case.periods() as f64;
        let avg = |f: &dyn Fn(&crate::clearing::MarketOutcome) -> f64| r.outcomes.iter().map(|o| case.weight(o.w) * f(o)).sum::<f64>();
        let avg_mcp_e = avg(&|o| o.mcp_e.iter().sum::<f64>() / nt);
        let avg_mcp_h = avg(&|o| o.mcp_h.iter().sum::<f64>() / nt);
        for (i, h) in case.hmgs.iter().enumerate() {
            let g = r.structure.group_of(i).expect("structures partition the H-MGs");
            rows.push(SweepRow {
                structure: r.structure.label.clone(),
                hmg: h.id.clone(),
                expected_income: r.hmg_profit[i],
                avg_mcp_e,
                avg_mcp_h,
                equilibrium: r.equilibrium,
                deviation_margin: r.deviation_margin,
                bid_fractions: r.point[g].iter().map(|&l| ev.grid.fraction(l)).collect(),
                best_structure: false,
                dr: dr_statistics(case, &r.outcomes, i),
            });
        }
    }
    for h in &case.hmgs {
        let mut best: Option<usize> = None;
        for (k, r) in rows.iter().enumerate().filter(|(_, r)| r.hmg == h.id) {
            if best.map_or(true, |b| r.expected_income > rows[b].expected_income + 1e-9) {
                best = Some(k);
            }
        }
        if let Some(b) = best {
            rows[b].best_structure = true;
        }
    }
    Ok(SweepTable { rows, records, clears: ev.clears() })
}

//! Raw solution dumps: enough to rebuild the clearing problem and re-run
//! the KKT verifier without re-solving.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, IoError};
use crate::clearing::{assemble_clearing_lp, ClearingProblem, MarketOutcome};
use crate::devices::BidVector;
use crate::lp::{LpSolution, Status};
use crate::model::{CaseDefinition, CoalitionStructure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub structure: String,
    pub scenarios: Vec<usize>,
    pub bids: BidVector,
}

fn table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    fs::write(path, w.into_inner().expect("in-memory flush")).map_err(io_err(path))
}

/// Writes `solution.json` plus per-scenario primal and dual tables at full
/// precision.
pub fn write_solution(dir: &Path, bids: &BidVector, outcomes: &[MarketOutcome]) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = SolutionMeta {
        structure: outcomes.first().map_or(String::new(), |o| o.structure.clone()),
        scenarios: outcomes.iter().map(|o| o.w + 1).collect(),
        bids: bids.clone(),
    };
    let p = dir.join("solution.json");
    fs::write(&p, serde_json::to_string(&meta).expect("meta serializes")).map_err(io_err(&p))?;
    for o in outcomes {
        let (lp, s) = (&o.problem.lp, &o.solution);
        table(
            &dir.join(format!("primal_w{}.csv", o.w + 1)),
            &["name", "value", "reduced_cost"],
            (0..lp.num_vars()).map(|j| vec![lp.col_names()[j].clone(), s.x[j].to_string(), s.reduced_costs[j].to_string()]),
        )?;
        table(
            &dir.join(format!("duals_w{}.csv", o.w + 1)),
            &["row", "dual"],
            lp.rows().iter().zip(&s.row_duals).map(|(r, y)| vec![r.name.clone(), y.to_string()]),
        )?;
    }
    Ok(())
}

fn read_pairs(path: &Path, cols: usize) -> Result<HashMap<String, Vec<f64>>, IoError> {
    let err = |message: String| IoError::Csv { path: path.to_path_buf(), message };
    if !path.is_file() {
        return Err(err("file not found".into()));
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let vals = (1..=cols)
            .map(|k| rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| err(format!("bad record for `{}`", &rec[0]))))
            .collect::<Result<Vec<f64>, _>>()?;
        out.insert(rec[0].to_string(), vals);
    }
    Ok(out)
}

/// Rebuilds the clearing problems of a dump and the recorded solutions.
/// Solutions are marked optimal; the verifier decides whether they are.
pub fn load_solution(case: &CaseDefinition, dir: &Path) -> Result<Vec<(ClearingProblem, LpSolution)>, IoError> {
    let p = dir.join("solution.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let meta: SolutionMeta = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: p.clone(),
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    })?;
    let structure = CoalitionStructure::parse(case, &meta.structure)
        .ok_or_else(|| IoError::Schema { path: p.clone(), at: "structure".into(), message: format!("`{}` is not a structure of this case", meta.structure) })?;
    let mut out = Vec::new();
    for &w1 in &meta.scenarios {
        let w = w1.checked_sub(1).filter(|&w| w < case.num_scenarios()).ok_or_else(|| IoError::Schema {
            path: p.clone(),
            at: "scenarios".into(),
            message: format!("scenario {w1} out of range"),
        })?;
        let problem = assemble_clearing_lp(case, &structure, &meta.bids, w)?;
        let pf = dir.join(format!("primal_w{w1}.csv"));
        let df = dir.join(format!("duals_w{w1}.csv"));
        let primal = read_pairs(&pf, 2)?;
        let duals = read_pairs(&df, 1)?;
        let lp = &problem.lp;
        let missing = |path: &Path, name: &str| IoError::Csv { path: path.to_path_buf(), message: format!("no entry for `{name}`") };
        let mut x = Vec::with_capacity(lp.num_vars());
        let mut d = Vec::with_capacity(lp.num_vars());
        for name in lp.col_names() {
            let v = primal.get(name).ok_or_else(|| missing(&pf, name))?;
            x.push(v[0]);
            d.push(v[1]);
        }
        let y = lp.rows().iter().map(|r| duals.get(&r.name).map(|v| v[0]).ok_or_else(|| missing(&df, &r.name))).collect::<Result<Vec<_>, _>>()?;
        let objective = lp.objective_value(&x);
        let sol = LpSolution { status: Status::Optimal, x, row_duals: y, reduced_costs: d, objective, iterations: 0, basis: None };
        out.push((problem, sol));
    }
    Ok(out)
}

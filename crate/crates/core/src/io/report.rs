use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{io_err, IoError};
use crate::clearing::MarketOutcome;
use crate::coalition::SweepRow;
use crate::devices::Player;
use crate::kkt::WorstResidual;
use crate::model::{CaseDefinition, ModelOptions, Tolerances};

/// Tables written by [`emit_report`], in manifest order.
pub const FILES: [&str; 6] = ["mcp.csv", "schedule.csv", "profits.csv", "sweep.csv", "dr_stats.csv", "kkt.csv"];

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub case_path: String,
    pub mode: String,
    pub structure_filter: Option<String>,
    pub levels: usize,
    pub tolerances: Tolerances,
    pub options: Option<ModelOptions>,
    /// The pipeline draws no random numbers; kept for reproducibility records.
    pub seed: u64,
    pub out_dir: String,
    pub version: String,
    /// SHA-256 of every table, filled in by [`emit_report`].
    #[serde(default)]
    pub files: BTreeMap<String, String>,
}

/// Nine significant digits, plain notation for moderate magnitudes.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let e = v.abs().log10().floor() as i32;
    let s = if (-5..9).contains(&e) {
        let s = format!("{:.*}", (8 - e).max(0) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn player_id(case: &CaseDefinition, p: Player) -> &str {
    match p {
        Player::Hmg(i) => &case.hmgs[i].id,
        Player::Retailer(k) => &case.retailers[k].id,
    }
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn tables(case: &CaseDefinition, outcomes: &[MarketOutcome], sweep: &[SweepRow]) -> Vec<Vec<u8>> {
    let mut mcp_h = strings(&["structure", "w", "t", "mcp_e", "mcp_h", "degenerate"]);
    for h in &case.hmgs {
        mcp_h.push(format!("lambda_e_{}", h.id));
        mcp_h.push(format!("lambda_h_{}", h.id));
    }
    let mut mcp = Vec::new();
    let mut schedule = Vec::new();
    let mut profits = Vec::new();
    let mut kkt = Vec::new();
    for o in outcomes {
        let w = (o.w + 1).to_string();
        for t in 0..o.mcp_e.len() {
            let mut r = vec![o.structure.clone(), w.clone(), (t + 1).to_string(), fmt_num(o.mcp_e[t]), fmt_num(o.mcp_h[t]), o.degenerate[t].to_string()];
            for i in 0..o.lambda_e.len() {
                r.push(fmt_num(o.lambda_e[i][t]));
                r.push(fmt_num(o.lambda_h[i][t]));
            }
            mcp.push(r);
        }
        for (v, &x) in o.problem.vars.iter().zip(&o.solution.x) {
            schedule.push(vec![o.structure.clone(), v.name.clone(), fmt_num(x)]);
        }
        for (&p, &v) in &o.profits {
            profits.push(vec![o.structure.clone(), w.clone(), player_id(case, p).to_string(), fmt_num(v)]);
        }
        if let Some(rep) = &o.kkt {
            if let Some(note) = &rep.note {
                kkt.push(vec![o.structure.clone(), w.clone(), "note".into(), String::new(), note.clone(), String::new(), "false".into()]);
            }
            let mut fam = |name: &str, rs: &[WorstResidual], tol: f64| {
                for r in rs {
                    kkt.push(vec![
                        o.structure.clone(),
                        w.clone(),
                        name.to_string(),
                        r.id.to_string(),
                        r.index.clone(),
                        fmt_num(r.value),
                        (r.value <= tol).to_string(),
                    ]);
                }
            };
            fam("stationarity", &rep.stationarity, rep.tol_s);
            fam("complementarity", &rep.complementarity, rep.tol_c);
            fam("primal", &rep.primal, rep.tol_s);
        }
    }
    let mut sweep_rows = Vec::new();
    let mut dr_rows = Vec::new();
    for r in sweep {
        sweep_rows.push(vec![
            r.structure.clone(),
            r.hmg.clone(),
            fmt_num(r.expected_income),
            fmt_num(r.avg_mcp_e),
            fmt_num(r.avg_mcp_h),
            r.equilibrium.to_string(),
            fmt_num(r.deviation_margin),
            r.best_structure.to_string(),
            r.bid_fractions.iter().map(|&f| fmt_num(f)).collect::<Vec<_>>().join(";"),
        ]);
        dr_rows.push(vec![r.structure.clone(), r.hmg.clone(), fmt_num(r.dr.shift_share), fmt_num(r.dr.dr_plus_periods), fmt_num(r.dr.dr_minus_periods)]);
    }
    vec![
        to_csv(&mcp_h, &mcp),
        to_csv(&strings(&["structure", "name", "value"]), &schedule),
        to_csv(&strings(&["structure", "w", "player", "profit"]), &profits),
        to_csv(
            &strings(&["structure", "hmg", "expected_income", "avg_mcp_e", "avg_mcp_h", "equilibrium_flag", "deviation_margin", "best_structure", "bid_fractions"]),
            &sweep_rows,
        ),
        to_csv(&strings(&["structure", "hmg", "shift_share", "dr_plus_periods", "dr_minus_periods"]), &dr_rows),
        to_csv(&strings(&["structure", "w", "family", "equation", "index", "residual", "pass"]), &kkt),
    ]
}

/// Writes every table and `manifest.json` into `dir`; returns the manifest
/// with file hashes.
pub fn emit_report(
    case: &CaseDefinition,
    outcomes: &[MarketOutcome],
    sweep: &[SweepRow],
    manifest: &RunManifest,
    dir: &Path,
) -> Result<RunManifest, IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut m = manifest.clone();
    m.files.clear();
    for (name, bytes) in FILES.iter().zip(tables(case, outcomes, sweep)) {
        let p = dir.join(name);
        fs::write(&p, &bytes).map_err(io_err(&p))?;
        m.files.insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
    }
    let p = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    fs::write(&p, text).map_err(io_err(&p))?;
    Ok(m)
}

/// Reads `manifest.json` from a run directory and checks every recorded hash.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest, IoError> {
    let p = dir.join("manifest.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: p.clone(),
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    })?;
    for (name, hash) in &m.files {
        let f = dir.join(name);
        let bytes = fs::read(&f).map_err(io_err(&f))?;
        if hex::encode(Sha256::digest(&bytes)) != *hash {
            return Err(IoError::HashMismatch { path: p, file: name.clone() });
        }
    }
    Ok(m)
}

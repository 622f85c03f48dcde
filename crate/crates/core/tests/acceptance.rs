//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p hmg-core --test acceptance`. Set `HMG_BLESS=1` to
//! rewrite the frozen sweep incomes in `tests/golden/table1_sweep.csv`.

mod support;

use std::path::{Path, PathBuf};
use std::time::Instant;

use hmg_core::clearing::{clear_market, conservation, MarketOutcome};
use hmg_core::coalition::{coalition_profit, solve_bilevel, structure_sweep, sweep_with, Evaluator, SweepTable};
use hmg_core::devices::Player;
use hmg_core::io::{emit_report, fmt_num, load_case, KeyPolicy, RunManifest, FILES};
use hmg_core::kkt::{assert_kkt, KktOptions};
use hmg_core::lp::{solve_lp, Status};
use hmg_core::model::{enumerate_structures, validate_case, CoalitionStructure, StructureMode, ValidatedCase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEVELS: usize = 5;

struct Line {
    ok: bool,
    detail: String,
}

fn report(n: usize, name: &str, l: &Line) {
    println!("criterion {n} {name}: {} ({})", if l.ok { "PASS" } else { "FAIL" }, l.detail);
}

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases/table1.json")
}

fn load_shipped() -> ValidatedCase {
    validate_case(load_case(&shipped(), KeyPolicy::Strict).expect("shipped case loads").case).expect("shipped case validates")
}

fn grand(case: &ValidatedCase) -> CoalitionStructure {
    CoalitionStructure::new(case, (0..case.hmgs.len()).collect(), vec![])
}

/// Feasible micro-market clears, in generation order.
fn micro_outcomes(seed: u64, count: usize) -> Vec<(ValidatedCase, MarketOutcome)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let Ok(case) = validate_case(support::micro_case(&mut rng)) else { continue };
        let bids = support::micro_bids(&mut rng, &case);
        if let Ok(o) = clear_market(&case, &grand(&case), &bids, 0) {
            out.push((case, o));
        }
    }
    out
}

fn kkt_certification(case: &ValidatedCase) -> (Line, SweepTable) {
    let start = Instant::now();
    let ev = Evaluator::verifying(case, LEVELS).expect("evaluator");
    let structures = enumerate_structures(case, StructureMode::All);
    let table = sweep_with(&ev, &structures).expect("sweep");
    let secs = start.elapsed().as_secs_f64();
    let audit = ev.audit();
    let terminal_ok = table.records.iter().flat_map(|r| &r.outcomes).all(|o| o.kkt.as_ref().is_some_and(|k| k.pass));
    let ok = structures.len() == 7
        && audit.failed == 0
        && audit.checked > 0
        && audit.max_stationarity <= 1e-6
        && audit.max_complementarity <= 1e-6
        && terminal_ok
        && secs < 60.0;
    let detail = format!(
        "{} structures, {} clears verified, {} failed, max stationarity {:.1e}, max complementarity {:.1e}, sweep {secs:.1} s",
        structures.len(),
        audit.checked,
        audit.failed,
        audit.max_stationarity,
        audit.max_complementarity
    );
    (Line { ok, detail }, table)
}

fn sensitivity() -> Line {
    let eps = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut tried = 0;
    while done < 20 && tried < 2000 {
        tried += 1;
        let Ok(case) = validate_case(support::micro_case(&mut rng)) else { continue };
        let bids = support::micro_bids(&mut rng, &case);
        let Ok(o) = clear_market(&case, &grand(&case), &bids, 0) else { continue };
        let i = rng.gen_range(0..case.hmgs.len());
        let t = rng.gen_range(0..case.periods());
        let lam = o.lambda_e[i][t];
        if o.degenerate[t] || lam.abs() < 1e-4 {
            continue;
        }
        let mut c = case.clone().into_inner();
        c.hmgs[i].load.0[0][t] += eps;
        let c = validate_case(c).unwrap();
        let Ok(p) = clear_market(&c, &grand(&c), &bids, 0) else { continue };
        // welfare falls by the price of the extra demand
        let rel = ((p.objective - o.objective) + lam * eps).abs() / (lam * eps).abs();
        worst = worst.max(rel);
        done += 1;
    }
    Line { ok: done == 20 && worst <= 1e-6, detail: format!("{done} instances, worst relative error {worst:.1e}") }
}

fn conservation_suite(case: &ValidatedCase, table: &SweepTable) -> Line {
    let mut worst: f64 = 0.0;
    let mut netting: f64 = 0.0;
    let mut n = 0;
    for r in &table.records {
        for o in &r.outcomes {
            worst = worst.max(conservation(case, &o.problem, &o.solution).max());
            let groups = coalition_profit(case, &r.structure, o).unwrap();
            for (g, members) in r.structure.groups().iter().enumerate() {
                let sum: f64 = members.iter().map(|&i| o.profits[&Player::Hmg(i)]).sum();
                netting = netting.max((groups[g] - sum).abs());
            }
            n += 1;
        }
    }
    for (c, o) in micro_outcomes(5, 60) {
        worst = worst.max(conservation(&c, &o.problem, &o.solution).max());
        n += 1;
    }
    Line {
        ok: worst <= 1e-9 && netting <= 1e-9,
        detail: format!("{n} optimal clears, worst identity residual {worst:.1e}, worst intra-coalition netting {netting:.1e}"),
    }
}

fn oracle_equivalence() -> Line {
    let mut lp_worst: f64 = 0.0;
    let mut lp_bad = 0;
    for seed in 0..200 {
        let lp = support::random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_lp(&lp).unwrap();
        match support::vertex_enumeration(&lp) {
            None => lp_bad += usize::from(sol.status != Status::Infeasible),
            Some(best) => {
                if sol.status != Status::Optimal {
                    lp_bad += 1;
                } else {
                    lp_worst = lp_worst.max((sol.objective - best).abs());
                }
            }
        }
    }
    let case = support::bilevel_micro();
    let mut bl_worst: f64 = 0.0;
    for label in ["{A,B}", "{AB}"] {
        let s = CoalitionStructure::parse(&case, label).unwrap();
        let table = support::joint_payoffs(&case, &s);
        let ev = Evaluator::new(&case, 5).unwrap();
        let r = solve_bilevel(&ev, &s, 50).unwrap();
        let idx = |l: &[u8]| 5 * l[0] as usize + l[1] as usize;
        if label == "{AB}" {
            let best = (0..25).map(|a| table[a][a][0] + table[a][a][1]).fold(f64::MIN, f64::max);
            bl_worst = bl_worst.max((r.group_profit[0] - best).abs());
        } else {
            let (a, b) = (idx(&r.point[0]), idx(&r.point[1]));
            for i in 0..2 {
                bl_worst = bl_worst.max((r.hmg_profit[i] - table[a][b][i]).abs());
            }
            if support::deviation_gain(&table, a, b) > 1e-6 {
                bl_worst = f64::INFINITY;
            }
        }
    }
    Line {
        ok: lp_bad == 0 && lp_worst <= 1e-7 && bl_worst <= 1e-9,
        detail: format!("(a) 200 LPs, {lp_bad} status mismatches, worst objective gap {lp_worst:.1e}; (b) worst bilevel profit gap {bl_worst:.1e}"),
    }
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/table1_sweep.csv")
}

fn qualitative(table: &SweepTable) -> Line {
    let base = "{A,B,C}";
    let mut up: Option<(String, String, f64)> = None;
    let mut down: Option<(String, String, f64)> = None;
    for r in table.rows.iter().filter(|r| r.structure != base) {
        let d = r.expected_income - table.income(base, &r.hmg).unwrap();
        if d > 1e-6 && up.as_ref().map_or(true, |u| d > u.2) {
            up = Some((r.structure.clone(), r.hmg.clone(), d));
        }
        if d < -1e-6 && down.as_ref().map_or(true, |u| d < u.2) {
            down = Some((r.structure.clone(), r.hmg.clone(), d));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["structure", "hmg", "expected_income"]).unwrap();
    for r in &table.rows {
        w.write_record([r.structure.clone(), r.hmg.clone(), fmt_num(r.expected_income)]).unwrap();
    }
    let path = golden_path();
    if std::env::var_os("HMG_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, w.into_inner().unwrap()).unwrap();
    }
    let golden: Vec<(String, String, f64)> = csv::Reader::from_path(&path)
        .map(|mut r| {
            r.records()
                .filter_map(Result::ok)
                .map(|f| (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap_or(f64::NAN)))
                .collect()
        })
        .unwrap_or_default();
    let mut golden_gap: f64 = if golden.len() == table.rows.len() { 0.0 } else { f64::INFINITY };
    for ((s, h, g), r) in golden.iter().zip(&table.rows) {
        let gap = if *s == r.structure && *h == r.hmg { (r.expected_income - g).abs() / g.abs().max(1.0) } else { f64::INFINITY };
        golden_gap = golden_gap.max(if gap.is_nan() { f64::INFINITY } else { gap });
    }
    let fmt = |x: &Option<(String, String, f64)>| x.as_ref().map_or("none".into(), |(s, h, d)| format!("{h} under {s} by {}", fmt_num(*d)));
    Line {
        ok: up.is_some() && down.is_some() && golden_gap <= 1e-6,
        detail: format!("largest gain {}; largest loss {}; golden relative gap {golden_gap:.1e}", fmt(&up), fmt(&down)),
    }
}

fn fault_detection() -> Line {
    let delta = 1e-3;
    let (mut total, mut flagged) = (0usize, 0usize);
    for (case, o) in micro_outcomes(17, 12) {
        if o.degenerate.iter().any(|&d| d) {
            continue;
        }
        let opts = KktOptions::from_case(&case);
        let base = &o.solution;
        let mut inject = |f: &dyn Fn(&mut hmg_core::lp::LpSolution)| {
            let mut s = base.clone();
            f(&mut s);
            total += 1;
            flagged += usize::from(!assert_kkt(&case, &o.problem, &s, &opts).pass);
        };
        for j in 0..base.x.len() {
            for d in [delta, -delta] {
                inject(&|s| s.x[j] += d);
                inject(&|s| s.reduced_costs[j] += d);
            }
        }
        for r in 0..base.row_duals.len() {
            for d in [delta, -delta] {
                inject(&|s| s.row_duals[r] += d);
            }
        }
    }
    let rate = flagged as f64 / total.max(1) as f64;
    Line { ok: total > 0 && rate >= 0.99, detail: format!("{flagged}/{total} injections flagged ({:.2}%)", 100.0 * rate) }
}

fn emit(case: &ValidatedCase, table: &SweepTable, dir: &Path) {
    let outcomes: Vec<MarketOutcome> = table.records.iter().flat_map(|r| r.outcomes.iter().cloned()).collect();
    let m = RunManifest { case_path: "cases/table1.json".into(), mode: "sweep".into(), levels: LEVELS, tolerances: case.tolerances.clone(), ..Default::default() };
    emit_report(case, &outcomes, &table.rows, &m, dir).expect("report");
}

fn determinism(case: &ValidatedCase, first: &SweepTable) -> Line {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit(case, first, a.path());
    let again = load_shipped();
    let second = structure_sweep(&again, StructureMode::All, LEVELS).expect("sweep");
    emit(&again, &second, b.path());
    let differing: Vec<&str> = FILES
        .iter()
        .chain(&["manifest.json"])
        .copied()
        .filter(|f| std::fs::read(a.path().join(f)).ok() != std::fs::read(b.path().join(f)).ok())
        .collect();
    Line {
        ok: differing.is_empty(),
        detail: if differing.is_empty() { format!("{} files byte-identical across two runs", FILES.len() + 1) } else { format!("differ: {}", differing.join(", ")) },
    }
}

fn main() {
    let case = load_shipped();
    let (c1, table) = kkt_certification(&case);
    let lines = [
        ("KKT certification", c1),
        ("dual-price sensitivity", sensitivity()),
        ("conservation", conservation_suite(&case, &table)),
        ("oracle equivalence", oracle_equivalence()),
        ("coalition effects", qualitative(&table)),
        ("fault detection", fault_detection()),
        ("determinism", determinism(&case, &table)),
    ];
    let mut failed = 0;
    for (n, (name, l)) in lines.iter().enumerate() {
        report(n + 1, name, l);
        failed += usize::from(!l.ok);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

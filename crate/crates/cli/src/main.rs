//! `hmg`: validate, clear and sweep home-microgrid market cases.
//!
//! Exit codes: 0 success, 1 infeasible or unbounded market, 2 invalid input,
//! 3 internal or numerical failure (including a failed KKT certificate).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hmg_core::clearing::{clear_market_with, ClearOptions, ClearingError, MarketOutcome};
use hmg_core::coalition::{structure_sweep, sweep_structures, CoalitionError, SweepTable};
use hmg_core::devices::BidVector;
use hmg_core::io::{emit_report, fmt_num, load_case, load_solution, verify_manifest, write_solution, IoError, KeyPolicy, RunManifest};
use hmg_core::kkt::{assert_kkt, KktOptions};
use hmg_core::model::{validate_case, CoalitionStructure, SocConvention, StructureMode, ValidatedCase};

#[derive(Parser)]
#[command(name = "hmg", version, about = "Coalition-aware day-ahead market clearing for home microgrids")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Reject unknown keys in case files (default).
    #[arg(long, global = true, conflicts_with = "lax")]
    strict: bool,
    /// Warn about unknown keys instead of rejecting them.
    #[arg(long, global = true)]
    lax: bool,
    #[arg(long, global = true, value_enum)]
    soc_convention: Option<SocArg>,
    #[arg(long, global = true, value_enum)]
    tes_loss: Option<OnOff>,
    /// Stationarity and complementarity tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SocArg {
    Physical,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    All,
    Coalitional,
    Independent,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a case.
    Validate { case: PathBuf },
    /// Clear the market for fixed bids.
    Clear {
        case: PathBuf,
        #[arg(long)]
        structure: Option<String>,
        /// JSON bid file, or `mid` for mid-grid bids.
        #[arg(long, default_value = "mid")]
        bids: String,
        /// Scenario number (1-based) or `all`.
        #[arg(short = 'w', default_value = "all")]
        scenario: String,
    },
    /// Equilibrium search for one coalition structure.
    Bilevel {
        case: PathBuf,
        #[arg(long)]
        structure: String,
        #[arg(short = 'K')]
        levels: Option<usize>,
    },
    /// Equilibrium search over every coalition structure.
    Sweep {
        case: PathBuf,
        #[arg(short = 'K')]
        levels: Option<usize>,
        #[arg(long, value_enum, default_value = "all")]
        mode: ModeArg,
    },
    /// Re-verify a solution written by `clear`.
    KktCheck { case: PathBuf, solution: PathBuf },
    /// Check the hashes of a run directory and print its sweep table.
    Report { run: PathBuf },
}

enum Failure {
    Market(String),
    Invalid(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Market(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Market(m) | Failure::Invalid(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<ClearingError> for Failure {
    fn from(e: ClearingError) -> Self {
        if e.is_market_failure() {
            Failure::Market(e.to_string())
        } else if matches!(e, ClearingError::BidOutOfBounds(_) | ClearingError::Device(_) | ClearingError::UnknownPlayer(_)) {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl From<CoalitionError> for Failure {
    fn from(e: CoalitionError) -> Self {
        match e {
            CoalitionError::Clearing(c) => c.into(),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Clearing(c) => c.into(),
            IoError::HashMismatch { .. } => Failure::Internal(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

fn load(path: &Path, g: &Global) -> Res<ValidatedCase> {
    let policy = if g.lax { KeyPolicy::Lax } else { KeyPolicy::Strict };
    let loaded = load_case(path, policy)?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: unknown key `{w}` ignored", path.display());
    }
    let mut case = loaded.case;
    if let Some(s) = g.soc_convention {
        case.options.soc_convention = match s {
            SocArg::Physical => SocConvention::Physical,
            SocArg::Literal => SocConvention::Literal,
        };
    }
    if let Some(t) = g.tes_loss {
        case.options.tes_loss = matches!(t, OnOff::On);
    }
    if let Some(tol) = g.tol {
        case.tolerances.stationarity = tol;
        case.tolerances.complementarity = tol;
    }
    validate_case(case).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn structure(case: &ValidatedCase, label: Option<&str>) -> Res<CoalitionStructure> {
    match label {
        Some(l) => CoalitionStructure::parse(case, l).ok_or_else(|| Failure::Invalid(format!("`{l}` is not a coalition structure of this case"))),
        None => Ok(CoalitionStructure::new(case, (0..case.hmgs.len()).collect(), vec![])),
    }
}

fn manifest(g: &Global, case_path: &Path, case: &ValidatedCase, mode: &str, filter: Option<String>, levels: usize) -> RunManifest {
    RunManifest {
        case_path: case_path.display().to_string(),
        mode: mode.into(),
        structure_filter: filter,
        levels,
        tolerances: case.tolerances.clone(),
        options: Some(case.options.clone()),
        seed: 0,
        out_dir: g.out.display().to_string(),
        version: env!("CARGO_PKG_VERSION").into(),
        files: Default::default(),
    }
}

fn kkt_failures(outcomes: &[MarketOutcome]) -> Vec<String> {
    outcomes
        .iter()
        .filter_map(|o| {
            let k = o.kkt.as_ref()?;
            (!k.pass).then(|| format!("{} w={}: {:?}", o.structure, o.w + 1, k.note.clone().or_else(|| k.worst().map(|r| format!("{} {} {}", r.id, r.index, r.value)))))
        })
        .collect()
}

fn print_sweep(t: &SweepTable) {
    println!("{:<10} {:<6} {:>14} {:>10} {:>10} {:>5} {:>12}", "structure", "hmg", "income", "mcp_e", "mcp_h", "eq", "margin");
    for r in &t.rows {
        println!(
            "{:<10} {:<6} {:>14} {:>10} {:>10} {:>5} {:>12}{}",
            r.structure,
            r.hmg,
            fmt_num(r.expected_income),
            fmt_num(r.avg_mcp_e),
            fmt_num(r.avg_mcp_h),
            if r.equilibrium { "yes" } else { "no" },
            fmt_num(r.deviation_margin),
            if r.best_structure { "  *best" } else { "" }
        );
    }
}

fn finish_search(g: &Global, path: &Path, case: &ValidatedCase, t: &SweepTable, mode: &str, filter: Option<String>, levels: usize) -> Res<()> {
    let outcomes: Vec<MarketOutcome> = t.records.iter().flat_map(|r| r.outcomes.iter().cloned()).collect();
    emit_report(case, &outcomes, &t.rows, &manifest(g, path, case, mode, filter, levels), &g.out)?;
    print_sweep(t);
    println!("{} LP solves; report in {}", t.clears, g.out.display());
    let bad = kkt_failures(&outcomes);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Internal(format!("KKT certificate failed: {}", bad.join("; "))))
    }
}

fn run(cli: Cli) -> Res<()> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Validate { case } => {
            let c = load(case, g)?;
            println!("ok: {} H-MGs, {} retailers, {} periods, {} scenarios", c.hmgs.len(), c.retailers.len(), c.periods(), c.num_scenarios());
            Ok(())
        }
        Cmd::Clear { case: path, structure: label, bids, scenario } => {
            let case = load(path, g)?;
            let s = structure(&case, label.as_deref())?;
            let bids = if bids == "mid" {
                BidVector::uniform(&case, 0.5, 0.5)
            } else {
                let text = std::fs::read_to_string(bids).map_err(|e| Failure::Invalid(format!("{bids}: {e}")))?;
                serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{bids}: {e}")))?
            };
            let ws: Vec<usize> = if scenario == "all" {
                (0..case.num_scenarios()).collect()
            } else {
                let w: usize = scenario.parse().ok().filter(|&w| (1..=case.num_scenarios()).contains(&w)).ok_or_else(|| Failure::Invalid(format!("-w {scenario}: expected 1..={} or all", case.num_scenarios())))?;
                vec![w - 1]
            };
            let opts = ClearOptions::from_case(&case);
            let outcomes = ws.iter().map(|&w| clear_market_with(&case, &s, &bids, w, None, &opts)).collect::<Result<Vec<_>, _>>()?;
            emit_report(&case, &outcomes, &[], &manifest(g, path, &case, "clear", Some(s.label.clone()), 0), &g.out)?;
            write_solution(&g.out.join("solution"), &bids, &outcomes)?;
            for o in &outcomes {
                let mut line = format!("{} w={} objective {}", o.structure, o.w + 1, fmt_num(o.objective));
                for (p, v) in &o.profits {
                    let id = match *p {
                        hmg_core::devices::Player::Hmg(i) => &case.hmgs[i].id,
                        hmg_core::devices::Player::Retailer(k) => &case.retailers[k].id,
                    };
                    let _ = write!(line, " {id}={}", fmt_num(*v));
                }
                println!("{line}");
            }
            println!("report in {}", g.out.display());
            let bad = kkt_failures(&outcomes);
            if bad.is_empty() {
                Ok(())
            } else {
                Err(Failure::Internal(format!("KKT certificate failed: {}", bad.join("; "))))
            }
        }
        Cmd::Bilevel { case: path, structure: label, levels } => {
            let case = load(path, g)?;
            let s = structure(&case, Some(label))?;
            let k = levels.unwrap_or(case.bid_levels);
            let t = sweep_structures(&case, std::slice::from_ref(&s), k)?;
            let r = &t.records[0];
            println!(
                "rounds {} converged {} cycle {} equilibrium {} alternatives {}",
                r.rounds,
                r.converged,
                r.cycle,
                r.equilibrium,
                r.alternatives.len()
            );
            finish_search(g, path, &case, &t, "bilevel", Some(s.label.clone()), k)
        }
        Cmd::Sweep { case: path, levels, mode } => {
            let case = load(path, g)?;
            let k = levels.unwrap_or(case.bid_levels);
            let (m, name) = match mode {
                ModeArg::All => (StructureMode::All, "sweep"),
                ModeArg::Coalitional => (StructureMode::Coalitional, "sweep-coalitional"),
                ModeArg::Independent => (StructureMode::Independent, "sweep-independent"),
            };
            let t = structure_sweep(&case, m, k)?;
            finish_search(g, path, &case, &t, name, None, k)
        }
        Cmd::KktCheck { case: path, solution } => {
            let case = load(path, g)?;
            let opts = KktOptions::from_case(&case);
            let mut bad = 0;
            for (p, sol) in load_solution(&case, solution)? {
                let rep = assert_kkt(&case, &p, &sol, &opts);
                println!(
                    "{} w={}: {} (stationarity {}, complementarity {}, primal {})",
                    p.structure,
                    p.w + 1,
                    if rep.pass { "pass" } else { "FAIL" },
                    fmt_num(rep.max_stationarity()),
                    fmt_num(rep.max_complementarity()),
                    fmt_num(rep.max_primal())
                );
                if !rep.pass {
                    bad += 1;
                    if let Some(w) = rep.worst() {
                        println!("  worst: {} at {} = {}", w.id, w.index, fmt_num(w.value));
                    }
                    if let Some(n) = &rep.note {
                        println!("  {n}");
                    }
                }
            }
            if bad == 0 {
                Ok(())
            } else {
                Err(Failure::Internal(format!("{bad} scenario(s) failed the KKT check")))
            }
        }
        Cmd::Report { run } => {
            let m = verify_manifest(run)?;
            println!("case {} mode {} K {} version {}", m.case_path, m.mode, m.levels, m.version);
            for (f, h) in &m.files {
                println!("  {f:<14} {h}");
            }
            let sweep = run.join("sweep.csv");
            let text = std::fs::read_to_string(&sweep).map_err(|e| Failure::Internal(format!("{}: {e}", sweep.display())))?;
            if text.lines().count() > 1 {
                print!("{text}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

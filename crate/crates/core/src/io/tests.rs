use std::path::{Path, PathBuf};

use super::*;
use crate::clearing::clear_market;
use crate::coalition::structure_sweep;
use crate::devices::BidVector;
use crate::kkt::{assert_kkt, KktOptions};
use crate::model::*;

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases/table1.json")
}

#[test]
fn shipped_case_is_the_reference_case() {
    let l = load_case(&shipped(), KeyPolicy::Strict).unwrap();
    assert!(l.warnings.is_empty());
    assert_eq!(l.case, reference::table1_case());
}

#[test]
fn empty_file_fails_at_first_position() {
    match load_case_str("", Path::new("x.json"), KeyPolicy::Strict) {
        Err(IoError::Parse { line, column, .. }) => assert_eq!((line, column), (1, 1)),
        other => panic!("{other:?}"),
    }
    match load_case_str("{\n  \"name\": ,\n}", Path::new("x.json"), KeyPolicy::Strict) {
        Err(IoError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 11)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn round_trip_inline_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let c = reference::table1_case();
    for (name, storage) in [("inline.json", SeriesStorage::Inline), ("split.json", SeriesStorage::Csv)] {
        let p = dir.path().join(name);
        save_case(&c, &p, storage).unwrap();
        assert_eq!(load_case(&p, KeyPolicy::Strict).unwrap().case, c);
    }
}

fn split_copy(dir: &Path) -> PathBuf {
    let p = dir.join("case.json");
    save_case(&reference::table1_case(), &p, SeriesStorage::Csv).unwrap();
    p
}

#[test]
fn short_csv_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = split_copy(dir.path());
    let csv = dir.path().join("case/hmgs_B_load.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    std::fs::write(&csv, lines[..lines.len() - 1].join("\n")).unwrap();
    match load_case(&p, KeyPolicy::Strict) {
        Err(e @ IoError::Length { expected: 24, found: 23, .. }) => assert!(e.to_string().contains("hmgs_B_load.csv"), "{e}"),
        other => panic!("{other:?}"),
    }
    std::fs::remove_file(&csv).unwrap();
    assert!(matches!(load_case(&p, KeyPolicy::Strict), Err(IoError::MissingCsv { .. })));
}

#[test]
fn unknown_keys_strict_and_lax() {
    let c = crate::devices::tests::mini_case(&[0.1], &[1.0], vec![]);
    let mut v = serde_json::to_value(&c).unwrap();
    v["hmgs"][0]["laod"] = serde_json::json!(3);
    v["options"]["tes_los"] = serde_json::json!(true);
    let text = v.to_string();
    match load_case_str(&text, Path::new("x.json"), KeyPolicy::Strict) {
        Err(IoError::UnknownKeys { keys, .. }) => assert_eq!(keys, ["hmgs[0].laod", "options.tes_los"]),
        other => panic!("{other:?}"),
    }
    let l = load_case_str(&text, Path::new("x.json"), KeyPolicy::Lax).unwrap();
    assert_eq!(l.warnings.len(), 2);
    assert_eq!(l.case, c);
}

#[test]
fn schema_errors_carry_a_path() {
    let c = crate::devices::tests::mini_case(&[0.1], &[1.0], vec![]);
    let mut v = serde_json::to_value(&c).unwrap();
    v["hmgs"][0]["export_fraction"] = serde_json::json!("half");
    match load_case_str(&v.to_string(), Path::new("x.json"), KeyPolicy::Strict) {
        Err(IoError::Schema { at, .. }) => assert_eq!(at, "hmgs[0].export_fraction"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn nine_significant_digits() {
    assert_eq!(fmt_num(0.0), "0");
    assert_eq!(fmt_num(-0.0), "0");
    assert_eq!(fmt_num(1.0), "1");
    assert_eq!(fmt_num(0.1 + 0.2), "0.3");
    assert_eq!(fmt_num(123456.789012), "123456.789");
    assert_eq!(fmt_num(-2.5e-3), "-0.0025");
    assert_eq!(fmt_num(9.9999999999), "10");
    assert_eq!(fmt_num(1.23456789e12), "1.23456789e12");
    assert_eq!(fmt_num(-1e-7), "-1.00000000e-7");
}

#[test]
fn empty_report_has_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let c = reference::table1_case();
    let m = emit_report(&c, &[], &[], &RunManifest::default(), dir.path()).unwrap();
    for f in FILES {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 1, "{f}");
        assert!(m.files.contains_key(f));
    }
    assert!(dir.path().join("manifest.json").is_file());
    verify_manifest(dir.path()).unwrap();
}

#[test]
fn report_is_deterministic_and_tamper_evident() {
    let c = validate_case(crate::devices::tests::mini_case(&[0.1, 0.05], &[10.0, 20.0], vec![DeviceSpec::WT(RenewableSpec { capacity: 25.0, availability: None })])).unwrap();
    let t = structure_sweep(&c, StructureMode::All, 3).unwrap();
    let outcomes: Vec<_> = t.records.iter().flat_map(|r| r.outcomes.clone()).collect();
    let man = RunManifest { mode: "sweep".into(), levels: 3, ..Default::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = emit_report(&c, &outcomes, &t.rows, &man, a.path()).unwrap();
    let mb = emit_report(&c, &outcomes, &t.rows, &man, b.path()).unwrap();
    assert_eq!(ma, mb);
    for f in FILES.iter().chain(&["manifest.json"]) {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let k5 = emit_report(&c, &outcomes, &t.rows, &RunManifest { levels: 5, ..man.clone() }, b.path()).unwrap();
    assert_eq!(RunManifest { levels: 3, ..k5 }, ma);
    std::fs::write(a.path().join("sweep.csv"), "tampered").unwrap();
    assert!(matches!(verify_manifest(a.path()), Err(IoError::HashMismatch { .. })));
}

#[test]
fn solution_dump_reverifies() {
    let c = validate_case(reference::table1_case()).unwrap();
    let s = CoalitionStructure::parse(&c, "{AB,C}").unwrap();
    let bids = BidVector::uniform(&c, 0.5, 0.5);
    let outs: Vec<_> = (0..2).map(|w| clear_market(&c, &s, &bids, w).unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    write_solution(dir.path(), &bids, &outs).unwrap();
    let back = load_solution(&c, dir.path()).unwrap();
    assert_eq!(back.len(), 2);
    for ((p, sol), o) in back.iter().zip(&outs) {
        assert_eq!(sol.x, o.solution.x);
        assert_eq!(sol.row_duals, o.solution.row_duals);
        assert!(assert_kkt(&c, p, sol, &KktOptions::default()).pass);
    }
}

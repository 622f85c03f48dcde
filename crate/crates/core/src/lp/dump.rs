//! Plain-text LP dump.
//!
//! ```text
//! HMGLP 1
//! VARS <n>
//! <name> <lower> <upper> <cost>
//! ROWS <m>
//! <name> <E|L|G> <rhs> <nnz> <col>:<coef> ...
//! END
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting (`inf`/`-inf` for
//! infinite bounds), so `read_dump(write_dump(lp)) == lp` exactly.

use std::fmt::Write as _;

use super::{LinearProgram, RowKind};

pub fn write_dump(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str("HMGLP 1\n");
    let _ = writeln!(out, "VARS {}", lp.num_vars());
    for j in 0..lp.num_vars() {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            lp.col_names()[j],
            lp.lower()[j],
            lp.upper()[j],
            lp.cost()[j]
        );
    }
    let _ = writeln!(out, "ROWS {}", lp.num_rows());
    for row in lp.rows() {
        let _ = write!(out, "{} {} {} {}", row.name, row.kind, row.rhs, row.terms.len());
        for &(j, a) in &row.terms {
            let _ = write!(out, " {j}:{a}");
        }
        out.push('\n');
    }
    out.push_str("END\n");
    out
}

pub fn read_dump(text: &str) -> Result<LinearProgram, String> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| {
        lines
            .next()
            .map(|(n, l)| (n + 1, l))
            .ok_or_else(|| format!("unexpected end of dump, expected {what}"))
    };
    let (n, header) = next("header")?;
    if header.trim() != "HMGLP 1" {
        return Err(format!("line {n}: bad header"));
    }
    let count = |line: (usize, &str), key: &str| -> Result<usize, String> {
        let (n, l) = line;
        l.strip_prefix(key)
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| format!("line {n}: expected `{key} <count>`"))
    };
    let num = |s: &str, n: usize| -> Result<f64, String> {
        s.parse::<f64>().map_err(|_| format!("line {n}: bad number `{s}`"))
    };
    let mut lp = LinearProgram::new();
    let nv = count(next("VARS")?, "VARS")?;
    for _ in 0..nv {
        let (n, l) = next("variable")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(format!("line {n}: expected 4 fields"));
        }
        let (lo, hi, c) = (num(f[1], n)?, num(f[2], n)?, num(f[3], n)?);
        if lo.is_finite() {
            lp.add_var(f[0], lo, hi, c);
        } else {
            let j = lp.add_free_var(f[0], c);
            lp.set_bounds(j, lo, hi);
        }
    }
    let nr = count(next("ROWS")?, "ROWS")?;
    for _ in 0..nr {
        let (n, l) = next("row")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() < 4 {
            return Err(format!("line {n}: short row"));
        }
        let kind = match f[1] {
            "E" => RowKind::Eq,
            "L" => RowKind::Le,
            "G" => RowKind::Ge,
            k => return Err(format!("line {n}: bad row kind `{k}`")),
        };
        let rhs = num(f[2], n)?;
        let nnz: usize = f[3].parse().map_err(|_| format!("line {n}: bad nnz"))?;
        if f.len() != 4 + nnz {
            return Err(format!("line {n}: expected {nnz} terms"));
        }
        let mut terms = Vec::with_capacity(nnz);
        for t in &f[4..] {
            let (j, a) = t.split_once(':').ok_or_else(|| format!("line {n}: bad term `{t}`"))?;
            let j: usize = j.parse().map_err(|_| format!("line {n}: bad column `{j}`"))?;
            terms.push((j, num(a, n)?));
        }
        lp.add_row(f[0], terms, kind, rhs);
    }
    let (n, end) = next("END")?;
    if end.trim() != "END" {
        return Err(format!("line {n}: expected END"));
    }
    lp.validate().map_err(|e| e.to_string())?;
    Ok(lp)
}

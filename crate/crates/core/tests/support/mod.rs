//! Test-only oracles, independent of the solver code paths they check.
#![allow(dead_code)]

use hmg_core::lp::{LinearProgram, RowKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Best objective over all basic feasible points of a bounded LP, found by
/// solving every `n x n` system of active hyperplanes. `None` if infeasible.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    if n == 0 {
        return lp.rows().iter().all(|r| feasible_row(r.kind, 0.0, r.rhs)).then_some(0.0);
    }
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in lp.rows() {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.terms {
            a[j] += v;
        }
        planes.push((a, r.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower()[j]));
        planes.push((e, lp.upper()[j]));
    }
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&idx.iter().map(|&k| planes[k].clone()).collect::<Vec<_>>()) {
            if is_feasible(lp, &x) {
                let obj = lp.objective_value(&x);
                best = Some(best.map_or(obj, |b: f64| b.max(obj)));
            }
        }
        // next combination
        let total = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < total - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn feasible_row(kind: RowKind, act: f64, rhs: f64) -> bool {
    let tol = 1e-9 * (1.0 + rhs.abs());
    match kind {
        RowKind::Eq => (act - rhs).abs() <= tol,
        RowKind::Le => act <= rhs + tol,
        RowKind::Ge => act >= rhs - tol,
    }
}

pub fn is_feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    let act = lp.row_activity(x);
    lp.rows().iter().zip(&act).all(|(r, &a)| feasible_row(r.kind, a, r.rhs))
        && (0..lp.num_vars()).all(|j| x[j] >= lp.lower()[j] - 1e-9 && x[j] <= lp.upper()[j] + 1e-9)
}

fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(*b);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap())?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// A random LP with at most 6 columns and 6 rows, every column boxed.
pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(0..=6);
    let mut lp = LinearProgram::new();
    for j in 0..n {
        let lo = rng.gen_range(-5..=0) as f64;
        let hi = lo + rng.gen_range(1..=10) as f64;
        lp.add_var(format!("x{j}"), lo, hi, rng.gen_range(-5..=5) as f64);
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                terms.push((j, rng.gen_range(-5..=5) as f64));
            }
        }
        let kind = match rng.gen_range(0..4) {
            0 => RowKind::Eq,
            1 | 2 => RowKind::Le,
            _ => RowKind::Ge,
        };
        lp.add_row(format!("r{i}"), terms, kind, rng.gen_range(-10..=10) as f64);
    }
    lp
}

/// Optimum of a maximization LP by a dense two-phase tableau simplex with
/// Bland's rule. Infinite bounds are replaced by `±big`. `None` if infeasible.
pub fn dense_simplex(lp: &LinearProgram, big: f64) -> Option<f64> {
    const EPS: f64 = 1e-9;
    let n = lp.num_vars();
    let lo: Vec<f64> = lp.lower().iter().map(|&l| if l.is_finite() { l } else { -big }).collect();
    let hi: Vec<f64> = lp.upper().iter().map(|&h| if h.is_finite() { h } else { big }).collect();
    // rows over shifted columns u = x - lo >= 0
    let mut rows: Vec<(Vec<f64>, RowKind, f64)> = Vec::new();
    for r in lp.rows() {
        let mut a = vec![0.0; n];
        let mut rhs = r.rhs;
        for &(j, v) in &r.terms {
            a[j] += v;
            rhs -= v * lo[j];
        }
        rows.push((a, r.kind, rhs));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        rows.push((a, RowKind::Le, hi[j] - lo[j]));
    }
    for (a, kind, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *kind = match *kind {
                RowKind::Le => RowKind::Ge,
                RowKind::Ge => RowKind::Le,
                RowKind::Eq => RowKind::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != RowKind::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowKind::Le).count();
    let cols = n + n_slack + n_art;
    let art0 = n + n_slack;
    let mut tab = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (n, art0);
    for (i, (coef, kind, rhs)) in rows.iter().enumerate() {
        tab[i][..n].copy_from_slice(coef);
        tab[i][cols] = *rhs;
        match kind {
            RowKind::Le => {
                tab[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            RowKind::Ge => {
                tab[i][s] = -1.0;
                s += 1;
                tab[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            RowKind::Eq => {
                tab[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }
    let pivot = |tab: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, c: usize| {
        let p = tab[r][c];
        tab[r].iter_mut().for_each(|v| *v /= p);
        let pr = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                row.iter_mut().zip(&pr).for_each(|(v, p)| *v -= f * p);
            }
        }
        basis[r] = c;
    };
    // maximize cost over allowed columns; false if unbounded
    let run = |tab: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        loop {
            let enter = (0..allowed).find(|&j| {
                let d = cost[j] - tab.iter().zip(basis.iter()).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                d > EPS && !basis.contains(&j)
            });
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..tab.len() {
                if tab[i][c] > EPS {
                    let ratio = tab[i][cols] / tab[i][c];
                    let better = match leave {
                        None => true,
                        Some((l, r)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && basis[i] < basis[l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            pivot(tab, basis, r, c);
        }
    };
    let mut c1 = vec![0.0; cols];
    c1[art0..].iter_mut().for_each(|v| *v = -1.0);
    run(&mut tab, &mut basis, &c1, cols);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= art0).map(|i| tab[i][cols]).sum();
    if infeas > 1e-7 {
        return None;
    }
    // drive zero-level artificials out of the basis or drop their rows
    let mut i = 0;
    while i < tab.len() {
        if basis[i] >= art0 {
            if let Some(c) = (0..art0).find(|&j| tab[i][j].abs() > EPS) {
                pivot(&mut tab, &mut basis, i, c);
            } else {
                tab.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let mut c2 = vec![0.0; cols];
    c2[..n].copy_from_slice(lp.cost());
    if !run(&mut tab, &mut basis, &c2, art0) {
        return Some(f64::INFINITY);
    }
    let mut u = vec![0.0; cols];
    for (i, &b) in basis.iter().enumerate() {
        u[b] = tab[i][cols];
    }
    Some((0..n).map(|j| lp.cost()[j] * (lo[j] + u[j])).sum())
}

/// A small random market: one or two H-MGs, one or two periods, a flat
/// forecast (so no load shifting), a few devices and usually a retailer.
pub fn micro_case(rng: &mut ChaCha8Rng) -> hmg_core::model::CaseDefinition {
    use hmg_core::model::*;
    let nt = rng.gen_range(1..=2);
    let n = rng.gen_range(1..=2);
    let forecast = rng.gen_range(5..=15) as f64 / 100.0;
    let mut hmgs = Vec::new();
    for i in 0..n {
        let mut devices = Vec::new();
        if rng.gen_bool(0.7) {
            devices.push(DeviceSpec::WT(RenewableSpec { capacity: rng.gen_range(10..=60) as f64, availability: None }));
        }
        if rng.gen_bool(0.3) {
            devices.push(DeviceSpec::CHP(ChpSpec {
                pe_min: 0.0,
                pe_max: 40.0,
                ph_min: 0.0,
                ph_max: 30.0,
                zeta_e: 0.4,
                zeta_h: 0.3,
                zeta_offset: 0.0,
                n_heat: 0.45,
                fuel_price: 0.03,
            }));
        }
        let heat = if rng.gen_bool(0.5) { rng.gen_range(0..=20) as f64 } else { 0.0 };
        if heat > 0.0 || rng.gen_bool(0.3) {
            devices.push(DeviceSpec::GB(BoilerSpec { heat_max: 40.0, n_fuel: 0.9, fuel_price: 0.03 }));
        }
        if nt == 2 && rng.gen_bool(0.3) {
            devices.push(DeviceSpec::ES(StorageSpec {
                p_max: Some(10.0),
                p_charge_max: None,
                volume_m3: None,
                soc_min: 0.1,
                soc_max: 1.0,
                soc_ini: 0.5,
                soc_end: 0.5,
                retention: 1.0,
            }));
        }
        let load: Vec<f64> = (0..nt).map(|_| rng.gen_range(1..=50) as f64).collect();
        hmgs.push(HmgSpec {
            id: ["A", "B"][i].into(),
            devices,
            load: Series(vec![load]),
            heat_load: Series(vec![vec![heat; nt]]),
            export_fraction: 1.0,
        });
    }
    let mut retailers = Vec::new();
    if rng.gen_bool(0.8) {
        retailers.push(RetailerSpec {
            id: "R".into(),
            sell_price: Series(vec![(0..nt).map(|_| rng.gen_range(6..=20) as f64 / 100.0).collect()]),
            buy_price: Series(vec![vec![0.01; nt]]),
            capacity: rng.gen_range(20..=200) as f64,
        });
    }
    CaseDefinition {
        name: "micro".into(),
        time: TimeGrid { periods: nt, step: 1.0 },
        scenarios: ScenarioSet { weights: vec![], mcp_forecast: Series(vec![vec![forecast; nt]]) },
        hmgs,
        retailers,
        bid_levels: 5,
        max_rounds: 50,
        tolerances: Tolerances::default(),
        options: ModelOptions::default(),
    }
}

/// Random bid fractions on the `K = 5` grid.
pub fn micro_bids(rng: &mut ChaCha8Rng, case: &hmg_core::model::CaseDefinition) -> hmg_core::devices::BidVector {
    let levels: Vec<(f64, f64)> = (0..64).map(|_| (rng.gen_range(0..5) as f64 / 4.0, rng.gen_range(0..5) as f64 / 4.0)).collect();
    hmg_core::devices::BidVector::from_fn(case, |i, j, t, _| levels[(i * 16 + j * 2 + t) % 64])
}

/// Two wind H-MGs over two periods with per-period bid classes and a
/// retailer dearer in the second period.
pub fn bilevel_micro() -> hmg_core::model::ValidatedCase {
    use hmg_core::model::*;
    let wt = |cap: f64| DeviceSpec::WT(RenewableSpec { capacity: cap, availability: None });
    let hmg = |id: &str, cap: f64, load: [f64; 2]| HmgSpec {
        id: id.into(),
        devices: vec![wt(cap)],
        load: Series(vec![load.to_vec()]),
        heat_load: Series(vec![vec![0.0, 0.0]]),
        export_fraction: 1.0,
    };
    let mut c = CaseDefinition {
        name: "bilevel-micro".into(),
        time: TimeGrid { periods: 2, step: 1.0 },
        scenarios: ScenarioSet { weights: vec![], mcp_forecast: Series(vec![vec![0.10, 0.10]]) },
        hmgs: vec![hmg("A", 30.0, [20.0, 35.0]), hmg("B", 25.0, [15.0, 30.0])],
        retailers: vec![RetailerSpec {
            id: "R".into(),
            sell_price: Series(vec![vec![0.06, 0.09]]),
            buy_price: Series(vec![vec![0.01, 0.01]]),
            capacity: 100.0,
        }],
        bid_levels: 5,
        max_rounds: 50,
        tolerances: Tolerances::default(),
        options: ModelOptions::default(),
    };
    c.options.bid_classes = BidClasses::PerPeriod;
    validate_case(c).unwrap()
}

/// Expected H-MG profits for every joint profile of a two-H-MG, two-period
/// case: `table[a][b]` where `a = 5 * level(t1) + level(t2)` for H-MG A.
/// Pass the structure the clears should be labelled with.
pub fn joint_payoffs(case: &hmg_core::model::ValidatedCase, structure: &hmg_core::model::CoalitionStructure) -> Vec<Vec<[f64; 2]>> {
    use hmg_core::devices::{BidVector, Player};
    let frac = |a: usize, t: usize| [a / 5, a % 5][t] as f64 / 4.0;
    (0..25)
        .map(|a| {
            (0..25)
                .map(|b| {
                    let bids = BidVector::from_fn(case, |i, _, t, _| (frac([a, b][i], t), 0.0));
                    let mut p = [0.0; 2];
                    for w in 0..case.num_scenarios() {
                        let o = hmg_core::clearing::clear_market(case, structure, &bids, w).unwrap();
                        for (i, v) in p.iter_mut().enumerate() {
                            *v += case.weight(w) * o.profits[&Player::Hmg(i)];
                        }
                    }
                    p
                })
                .collect()
        })
        .collect()
}

/// Largest unilateral gain at `(a, b)` in a payoff table.
pub fn deviation_gain(table: &[Vec<[f64; 2]>], a: usize, b: usize) -> f64 {
    let ga = (0..25).map(|x| table[x][b][0]).fold(f64::MIN, f64::max) - table[a][b][0];
    let gb = (0..25).map(|y| table[a][y][1]).fold(f64::MIN, f64::max) - table[a][b][1];
    ga.max(gb).max(0.0)
}

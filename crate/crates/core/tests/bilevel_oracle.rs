//! Equilibrium search against exhaustive enumeration of the joint bid grid.

mod support;

use hmg_core::coalition::{solve_bilevel, Evaluator};
use hmg_core::model::CoalitionStructure;

fn index(levels: &[u8]) -> usize {
    5 * levels[0] as usize + levels[1] as usize
}

#[test]
fn independent_players_match_enumeration() {
    let case = support::bilevel_micro();
    let s = CoalitionStructure::parse(&case, "{A,B}").unwrap();
    let table = support::joint_payoffs(&case, &s);
    let ev = Evaluator::new(&case, 5).unwrap();
    let r = solve_bilevel(&ev, &s, 50).unwrap();
    let (a, b) = (index(&r.point[0]), index(&r.point[1]));
    for i in 0..2 {
        assert!((r.hmg_profit[i] - table[a][b][i]).abs() <= 1e-9, "{} vs {}", r.hmg_profit[i], table[a][b][i]);
    }
    assert!((r.deviation_margin - support::deviation_gain(&table, a, b)).abs() <= 1e-9);
    let nash: Vec<(usize, usize)> = (0..25).flat_map(|x| (0..25).map(move |y| (x, y))).filter(|&(x, y)| support::deviation_gain(&table, x, y) <= 1e-6).collect();
    assert!(!nash.is_empty());
    assert!(r.equilibrium && nash.contains(&(a, b)), "{:?} not in {nash:?}", (a, b));
    let total = table[a][b][0] + table[a][b][1];
    for alt in &r.alternatives {
        let (x, y) = (index(&alt[0]), index(&alt[1]));
        assert!(nash.contains(&(x, y)));
        assert!((table[x][y][0] + table[x][y][1] - total).abs() <= 1e-6);
    }
}

#[test]
fn grand_coalition_matches_enumeration() {
    let case = support::bilevel_micro();
    let s = CoalitionStructure::parse(&case, "{AB}").unwrap();
    let table = support::joint_payoffs(&case, &s);
    let ev = Evaluator::new(&case, 5).unwrap();
    let r = solve_bilevel(&ev, &s, 50).unwrap();
    // one group: members bid the same levels
    let best = (0..25).map(|a| table[a][a][0] + table[a][a][1]).fold(f64::MIN, f64::max);
    assert!((r.group_profit[0] - best).abs() <= 1e-9, "{} vs {best}", r.group_profit[0]);
    assert!(r.equilibrium && r.deviation_margin == 0.0);
}

use super::*;
use crate::lp::{solve_lp, LinearProgram, Status};
use crate::model::*;

pub(crate) fn mini_case(mcp: &[f64], load: &[f64], devices: Vec<DeviceSpec>) -> CaseDefinition {
    let t = mcp.len();
    CaseDefinition {
        name: String::new(),
        time: TimeGrid { periods: t, step: 1.0 },
        scenarios: ScenarioSet { weights: vec![1.0], mcp_forecast: Series(vec![mcp.to_vec()]) },
        hmgs: vec![HmgSpec {
            id: "A".into(),
            devices,
            load: Series(vec![load.to_vec()]),
            heat_load: Series::constant(1, t, 0.0),
            export_fraction: 1.0,
        }],
        retailers: vec![],
        bid_levels: 5,
        max_rounds: 50,
        tolerances: Tolerances::default(),
        options: ModelOptions::default(),
    }
}

fn block_lp(b: &ConstraintBlock) -> LinearProgram {
    let mut lp = LinearProgram::new();
    for v in &b.vars {
        let j = lp.add_free_var(v.name.clone(), v.cost);
        lp.set_bounds(j, v.lo, v.hi);
    }
    for r in &b.rows {
        lp.add_row(r.name.clone(), r.terms.clone(), r.kind, r.rhs);
    }
    lp
}

fn col(b: &ConstraintBlock, name: &str) -> usize {
    b.vars.iter().position(|v| v.name == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn es(pmax: f64, ini: f64, end: f64, soc_min: f64) -> DeviceSpec {
    DeviceSpec::ES(StorageSpec {
        p_max: Some(pmax),
        p_charge_max: None,
        volume_m3: None,
        soc_min,
        soc_max: 1.0,
        soc_ini: ini,
        soc_end: end,
        retention: 1.0,
    })
}

#[test]
fn dr_single_shift_direction() {
    let c = mini_case(&[10.0, 5.0], &[100.0, 100.0], vec![]);
    let b = build_dr_block(&c, 0, 0).unwrap();
    let shifts: Vec<&VarDef> = b.vars.iter().filter(|v| v.name.contains("shift")).collect();
    assert_eq!(shifts.len(), 1);
    assert_eq!(shifts[0].name, "A.DR.shift_to2.1.1");
    assert_eq!(shifts[0].cost, 2.5);
    let cap = b.rows.iter().find(|r| r.tag == "eta_bar_D_e").unwrap();
    assert_eq!((cap.rhs, cap.kind), (100.0, RowKind::Le));
    let sol = solve_lp(&block_lp(&b)).unwrap();
    assert_eq!(sol.x[col(&b, "A.DR.shift_to2.1.1")], 100.0);
    assert_eq!(sol.x[col(&b, "A.DR.load.1.1")], 0.0);
    assert_eq!(sol.x[col(&b, "A.DR.load.2.1")], 200.0);
}

#[test]
fn dr_flat_prices_do_not_shift() {
    let c = mini_case(&[7.0, 7.0], &[30.0, 40.0], vec![]);
    let b = build_dr_block(&c, 0, 0).unwrap();
    assert!(b.vars.iter().all(|v| !v.name.contains("shift")));
    let sol = solve_lp(&block_lp(&b)).unwrap();
    assert_eq!(&sol.x[..], &[30.0, 40.0]);
}

#[test]
fn dr_single_period() {
    let c = mini_case(&[7.0], &[30.0], vec![]);
    let b = build_dr_block(&c, 0, 0).unwrap();
    assert_eq!(b.vars.len(), 1);
    assert_eq!(b.rows.len(), 1);
    assert_eq!(b.rows[0].tag, "gamma_D_e");
}

#[test]
fn dr_rejects_negative_load() {
    let c = mini_case(&[7.0], &[-1.0], vec![]);
    assert!(matches!(build_dr_block(&c, 0, 0), Err(DeviceError::NegativeLoad { .. })));
}

#[test]
fn chp_coupling() {
    let chp = DeviceSpec::CHP(ChpSpec {
        pe_min: 0.0,
        pe_max: 200.0,
        ph_min: 0.0,
        ph_max: 200.0,
        zeta_e: 0.35,
        zeta_h: 0.45,
        zeta_offset: 0.0,
        n_heat: 0.9,
        fuel_price: 0.03,
    });
    let c = mini_case(&[0.1], &[0.0], vec![chp]);
    let b = build_generation_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    let mut lp = block_lp(&b);
    lp.set_bounds(col(&b, "A.CHP0.h.1.1"), 90.0, 90.0);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.x[col(&b, "A.CHP0.e.1.1")] - 70.0).abs() < 1e-9);
}

#[test]
fn wind_without_availability_is_fixed_at_zero() {
    let wt = DeviceSpec::WT(RenewableSpec { capacity: 50.0, availability: Some(Series(vec![vec![0.0, 0.5]])) });
    let c = mini_case(&[0.1, 0.1], &[0.0, 0.0], vec![wt]);
    let b = build_generation_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    assert_eq!((b.vars[0].lo, b.vars[0].hi), (0.0, 0.0));
    assert_eq!(b.vars[1].hi, 25.0);
}

#[test]
fn gas_boiler_profit_nets_fuel() {
    let gb = DeviceSpec::GB(BoilerSpec { heat_max: 150.0, n_fuel: 0.9, fuel_price: 0.03 });
    let c = mini_case(&[0.05], &[0.0], vec![gb]);
    // thermal fraction 0.5 of 2 * 0.05 gives a 0.05 bid
    let b = build_generation_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    let v = &b.vars[0];
    assert_eq!(v.cost, -0.05);
    assert!((v.profit[0].1 - (0.05 - 0.03 / 0.9)).abs() < 1e-15);
}

fn storage_solve(dev: DeviceSpec, fixed: &[f64]) -> (Status, Vec<f64>) {
    let t = fixed.len();
    let c = mini_case(&vec![0.1; t], &vec![0.0; t], vec![dev]);
    let b = build_storage_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    let mut lp = block_lp(&b);
    for (k, &p) in fixed.iter().enumerate() {
        let j = col(&b, &format!("A.ES0.e.{}.1", k + 1));
        lp.set_bounds(j, p.max(lp.lower()[j]), p.min(lp.upper()[j]));
        if lp.lower()[j] > lp.upper()[j] {
            return (Status::Infeasible, vec![]);
        }
    }
    let sol = solve_lp(&lp).unwrap();
    let soc = (0..=t).map(|k| sol.x[col(&b, &format!("A.ES0.soc.{k}.1"))]).collect();
    (sol.status, soc)
}

#[test]
fn storage_trajectory_physical() {
    let (st, soc) = storage_solve(es(500.0, 0.5, 0.5, 0.0), &[250.0, -250.0]);
    assert_eq!(st, Status::Optimal);
    assert_eq!(soc, [0.5, 0.0, 0.5]);
    let (st, _) = storage_solve(es(500.0, 0.5, 0.5, 0.1), &[250.0, -250.0]);
    assert_eq!(st, Status::Infeasible);
}

#[test]
fn storage_idle_needs_equal_anchors() {
    let (st, soc) = storage_solve(es(500.0, 0.4, 0.4, 0.0), &[0.0, 0.0, 0.0]);
    assert_eq!(st, Status::Optimal);
    assert!(soc.iter().all(|&s| s == 0.4));
    let (st, _) = storage_solve(es(500.0, 0.4, 0.6, 0.0), &[0.0, 0.0, 0.0]);
    assert_eq!(st, Status::Infeasible);
}

#[test]
fn storage_power_bound() {
    let c = mini_case(&[0.1], &[0.0], vec![es(500.0, 0.5, 0.5, 0.0)]);
    let b = build_storage_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    let p = b.find_var("A.ES0.e.1.1").unwrap();
    assert!(600.0 > p.hi && -600.0 < p.lo);
}

#[test]
fn literal_convention_flips_recursion() {
    let mut c = mini_case(&[0.1], &[0.0], vec![es(500.0, 0.5, 0.5, 0.0)]);
    c.options.soc_convention = SocConvention::Literal;
    let b = build_storage_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    let rec = b.rows.iter().find(|r| r.tag == "gamma_ES").unwrap();
    let p = col(&b, "A.ES0.e.1.1");
    assert_eq!(rec.terms.iter().find(|t| t.0 == p).unwrap().1, -1.0 / 500.0);
}

fn conversion_heat(dev: DeviceSpec, heat: f64) -> (Status, f64) {
    let c = mini_case(&[0.1], &[0.0], vec![dev]);
    let b = build_conversion_block(&c, 0, 0, &BidVector::uniform(&c, 0.5, 0.5), 0).unwrap();
    let mut lp = block_lp(&b);
    let h = col(&b, &b.vars[1].name);
    if heat > lp.upper()[h] {
        return (Status::Infeasible, 0.0);
    }
    lp.set_bounds(h, heat, heat);
    let sol = solve_lp(&lp).unwrap();
    (sol.status, sol.x[0])
}

#[test]
fn heat_pump_full_output() {
    let (st, pe) = conversion_heat(DeviceSpec::EHP(ConversionSpec { heat_max: 700.0, efficiency: 3.0 }), 700.0);
    assert_eq!(st, Status::Optimal);
    assert!((pe - 233.333_333_333).abs() < 1e-6);
}

#[test]
fn unit_efficiency_boiler() {
    let (_, pe) = conversion_heat(DeviceSpec::EB(ConversionSpec { heat_max: 100.0, efficiency: 1.0 }), 64.0);
    assert_eq!(pe, 64.0);
}

#[test]
fn boiler_bank_split() {
    let eb = || DeviceSpec::EB(ConversionSpec { heat_max: 100.0, efficiency: 1.0 });
    assert_eq!(conversion_heat(eb(), 150.0).0, Status::Infeasible);
    let c = mini_case(&[0.1], &[0.0], vec![eb(), eb()]);
    let bids = BidVector::uniform(&c, 0.5, 0.5);
    let mut lp = LinearProgram::new();
    let mut heat = Vec::new();
    for j in 0..2 {
        let b = build_conversion_block(&c, 0, j, &bids, 0).unwrap();
        let off = lp.num_vars();
        for v in &b.vars {
            let k = lp.add_free_var(v.name.clone(), 0.0);
            lp.set_bounds(k, v.lo, v.hi);
        }
        for r in &b.rows {
            lp.add_row(r.name.clone(), r.terms.iter().map(|&(k, a)| (k + off, a)).collect(), r.kind, r.rhs);
        }
        heat.push((off + 1, 1.0));
    }
    lp.add_row("total", heat, RowKind::Eq, 150.0);
    assert_eq!(solve_lp(&lp).unwrap().status, Status::Optimal);
}

#[test]
fn bid_bound_checks() {
    let c = mini_case(&[0.10], &[0.0], vec![DeviceSpec::GB(BoilerSpec { heat_max: 1.0, n_fuel: 0.9, fuel_price: 0.0 })]);
    let mut bids = BidVector::uniform(&c, 1.0, 1.0);
    assert!(bid_bounds(&c, &bids).is_empty());
    bids.hmgs[0][0].h[0][0] = 0.25;
    let v = bid_bounds(&c, &bids);
    assert_eq!(v.len(), 1);
    assert_eq!((v[0].component, v[0].bound), (BidComponent::Thermal, 0.2));
    bids.hmgs[0][0].h[0][0] = 0.2;
    bids.hmgs[0][0].e[0][0] = -0.01;
    assert_eq!(bid_bounds(&c, &bids)[0].component, BidComponent::Electric);
}

fn with_retailers(eta: f64, n: usize) -> CaseDefinition {
    let mut c = mini_case(&[0.1], &[10.0], vec![]);
    c.hmgs[0].export_fraction = eta;
    for k in 0..n {
        c.retailers.push(RetailerSpec {
            id: format!("R{k}"),
            sell_price: Series(vec![vec![0.1]]),
            buy_price: Series(vec![vec![0.05]]),
            capacity: 100.0,
        });
    }
    c
}

#[test]
fn exchange_share_limits() {
    let b = build_exchange_block(&with_retailers(1.0, 1), 0, 0);
    assert!(b.rows.is_empty());

    let b = build_exchange_block(&with_retailers(0.0, 1), 0, 0);
    let mut lp = block_lp(&b);
    lp.set_cost(0, 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.x[0], 0.0);

    let c = with_retailers(0.5, 2);
    let b = build_exchange_block(&c, 0, 0);
    let mut lp = block_lp(&b);
    let (i0, i1) = (col(&b, "A.R0.import.1.1"), col(&b, "A.R1.import.1.1"));
    lp.set_cost(i0, 1.0);
    lp.set_cost(i1, -0.5);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.x[i0] - sol.x[i1]).abs() < 1e-9 && sol.x[i0] == 100.0);
}

#[test]
fn multiplier_tags_per_device() {
    let c = crate::model::validate_case(crate::model::reference::table1_case()).unwrap();
    let bids = BidVector::uniform(&c, 0.5, 0.5);
    let tags = |i: usize, j: usize| -> Vec<&'static str> {
        let b = match c.hmgs[i].devices[j].kind() {
            DeviceKind::ES | DeviceKind::TES => build_storage_block(&c, i, j, &bids, 0),
            DeviceKind::EB | DeviceKind::EHP => build_conversion_block(&c, i, j, &bids, 0),
            _ => build_generation_block(&c, i, j, &bids, 0),
        }
        .unwrap();
        b.tag_set().into_iter().collect()
    };
    assert_eq!(tags(0, 0), ["eta_bar_CHP_e", "eta_bar_CHP_h", "eta_lo_CHP_e", "eta_lo_CHP_h", "gamma_CHP_e"]);
    assert_eq!(tags(0, 1), ["gamma_bar_WT_e", "gamma_lo_WT_e"]);
    assert_eq!(tags(0, 2), ["eta_bar_GB_h", "eta_lo_GB_h"]);
    assert_eq!(tags(1, 1), ["eta_bar_EHP_h", "eta_lo_EHP_h", "gamma_HP_h"]);
    assert_eq!(tags(1, 2), ["eta_bar_STP_h", "eta_lo_STP_h"]);
    assert_eq!(
        tags(1, 3),
        ["eta_bar_ES_SOC", "eta_bar_ES_e", "eta_lo_ES_SOC", "eta_lo_ES_e", "gamma_ES", "gamma_end_ES", "gamma_ini_ES"]
    );
    assert_eq!(
        tags(2, 0),
        ["eta_bar_TES_SOC", "eta_bar_TES_h", "eta_lo_TES_SOC", "eta_lo_TES_h", "gamma_TES", "gamma_end_TES", "gamma_ini_TES"]
    );
    assert_eq!(tags(2, 1), ["eta_bar_EB_h", "eta_lo_EB_h", "zeta_EB_h"]);
    let dr: Vec<_> = build_dr_block(&c, 0, 0).unwrap().tag_set().into_iter().collect();
    assert_eq!(dr, ["eta_bar_D_e", "eta_min_D_e", "gamma_D_e"]);
}

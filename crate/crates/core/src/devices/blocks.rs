use thiserror::Error;

use super::{var_name, BidVector, Carrier, ConstraintBlock, Player, VarDef};
use crate::lp::RowKind;
use crate::model::{CaseDefinition, DeviceSpec, SocConvention};

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("{hmg}: predicted load {value} at t={t}, w={w} is negative")]
    NegativeLoad { hmg: String, t: usize, w: usize, value: f64 },
    #[error("{hmg} device {device}: {kind} is not handled by this block")]
    WrongKind { hmg: String, device: usize, kind: &'static str },
    #[error("{hmg} device {device}: {field} must be positive")]
    BadParameter { hmg: String, device: usize, field: &'static str },
}

/// Realized load, load shifts, the shift caps and the DSM revenue of one H-MG.
pub fn build_dr_block(case: &CaseDefinition, i: usize, w: usize) -> Result<ConstraintBlock, DeviceError> {
    let h = &case.hmgs[i];
    let nt = case.periods();
    let mcp = &case.scenarios.mcp_forecast;
    for t in 0..nt {
        let v = h.load.at(t, w);
        if !(v >= 0.0) {
            return Err(DeviceError::NegativeLoad { hmg: h.id.clone(), t: t + 1, w: w + 1, value: v });
        }
    }
    let mut b = ConstraintBlock::default();
    let load: Vec<usize> = (0..nt)
        .map(|t| {
            let mut v = VarDef::new(var_name(&h.id, "DR", "load", t + 1, w), f64::NEG_INFINITY, f64::INFINITY, Some(t));
            v.balance.push((Carrier::Electric, i, 1.0));
            b.var(v)
        })
        .collect();
    // shifts[t] = (destination, column)
    let mut shifts: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nt];
    for t in 0..nt {
        for t2 in 0..nt {
            let gain = mcp.at(t, w) - mcp.at(t2, w);
            if t2 == t || gain <= 0.0 {
                continue;
            }
            let mut v = VarDef::new(var_name(&h.id, "DR", &format!("shift_to{}", t2 + 1), t + 1, w), 0.0, f64::INFINITY, Some(t));
            v.cost = 0.5 * gain;
            v.profit.push((Player::Hmg(i), 0.5 * gain));
            v.lower_tag = Some("eta_min_D_e");
            shifts[t].push((t2, b.var(v)));
        }
    }
    for t in 0..nt {
        let mut terms = vec![(load[t], 1.0)];
        terms.extend(shifts[t].iter().map(|&(_, c)| (c, 1.0)));
        for (s, out) in shifts.iter().enumerate() {
            if s != t {
                terms.extend(out.iter().filter(|&&(d, _)| d == t).map(|&(_, c)| (c, -1.0)));
            }
        }
        b.row(var_name(&h.id, "DR", "gamma_D_e", t + 1, w), "gamma_D_e", terms, RowKind::Eq, h.load.at(t, w));
    }
    for t in 0..nt {
        if !shifts[t].is_empty() {
            let terms = shifts[t].iter().map(|&(_, c)| (c, 1.0)).collect();
            b.row(var_name(&h.id, "DR", "eta_bar_D_e", t + 1, w), "eta_bar_D_e", terms, RowKind::Le, h.load.at(t, w));
        }
    }
    Ok(b)
}

/// Registry label of device `j` of H-MG `i`, e.g. `WT1`.
pub fn dev_label(case: &CaseDefinition, i: usize, j: usize) -> String {
    format!("{}{}", case.hmgs[i].devices[j].kind().tag(), j)
}

fn wrong(case: &CaseDefinition, i: usize, j: usize) -> DeviceError {
    DeviceError::WrongKind { hmg: case.hmgs[i].id.clone(), device: j, kind: case.hmgs[i].devices[j].kind().tag() }
}

/// A seller column: clears at `-bid`, earns `bid - unit_cost`.
#[allow(clippy::too_many_arguments)]
fn seller(name: String, lo: f64, hi: f64, t: usize, i: usize, carrier: Carrier, bid: f64, unit_cost: f64) -> VarDef {
    let mut v = VarDef::new(name, lo, hi, Some(t));
    v.cost = -bid;
    v.profit.push((Player::Hmg(i), bid - unit_cost));
    v.balance.push((carrier, i, -1.0));
    v
}

/// CHP, wind turbine, solar thermal panel or gas boiler `j` of H-MG `i`.
pub fn build_generation_block(
    case: &CaseDefinition,
    i: usize,
    j: usize,
    bids: &BidVector,
    w: usize,
) -> Result<ConstraintBlock, DeviceError> {
    let h = &case.hmgs[i];
    let d = dev_label(case, i, j);
    let nt = case.periods();
    let mut b = ConstraintBlock::default();
    match &h.devices[j] {
        DeviceSpec::CHP(c) => {
            for t in 0..nt {
                let pe = b.var(
                    seller(var_name(&h.id, &d, "e", t + 1, w), c.pe_min, c.pe_max, t, i, Carrier::Electric, bids.e(i, j, t, w), 0.0)
                        .tags("eta_lo_CHP_e", "eta_bar_CHP_e"),
                );
                let fuel = c.fuel_price / c.n_heat;
                let ph = b.var(
                    seller(var_name(&h.id, &d, "h", t + 1, w), c.ph_min, c.ph_max, t, i, Carrier::Thermal, bids.h(i, j, t, w), fuel)
                        .tags("eta_lo_CHP_h", "eta_bar_CHP_h"),
                );
                b.row(
                    var_name(&h.id, &d, "gamma_CHP_e", t + 1, w),
                    "gamma_CHP_e",
                    vec![(pe, 1.0), (ph, -c.zeta_e / c.zeta_h)],
                    RowKind::Eq,
                    c.zeta_offset,
                );
            }
        }
        DeviceSpec::WT(r) | DeviceSpec::STP(r) => {
            let wt = matches!(h.devices[j], DeviceSpec::WT(_));
            for t in 0..nt {
                let avail = r.availability.as_ref().map_or(1.0, |a| a.at(t, w));
                let v = if wt {
                    seller(var_name(&h.id, &d, "e", t + 1, w), 0.0, r.capacity * avail, t, i, Carrier::Electric, bids.e(i, j, t, w), 0.0)
                        .tags("gamma_lo_WT_e", "gamma_bar_WT_e")
                } else {
                    seller(var_name(&h.id, &d, "h", t + 1, w), 0.0, r.capacity * avail, t, i, Carrier::Thermal, bids.h(i, j, t, w), 0.0)
                        .tags("eta_lo_STP_h", "eta_bar_STP_h")
                };
                b.var(v);
            }
        }
        DeviceSpec::GB(g) => {
            for t in 0..nt {
                b.var(
                    seller(
                        var_name(&h.id, &d, "h", t + 1, w),
                        0.0,
                        g.heat_max,
                        t,
                        i,
                        Carrier::Thermal,
                        bids.h(i, j, t, w),
                        g.fuel_price / g.n_fuel,
                    )
                    .tags("eta_lo_GB_h", "eta_bar_GB_h"),
                );
            }
        }
        _ => return Err(wrong(case, i, j)),
    }
    Ok(b)
}

/// Electrical or thermal storage `j` of H-MG `i`.
pub fn build_storage_block(
    case: &CaseDefinition,
    i: usize,
    j: usize,
    bids: &BidVector,
    w: usize,
) -> Result<ConstraintBlock, DeviceError> {
    let h = &case.hmgs[i];
    let (s, es) = match &h.devices[j] {
        DeviceSpec::ES(s) => (s, true),
        DeviceSpec::TES(s) => (s, false),
        _ => return Err(wrong(case, i, j)),
    };
    let pmax = s.discharge_max();
    if !(pmax > 0.0) {
        return Err(DeviceError::BadParameter { hmg: h.id.clone(), device: j, field: "p_max" });
    }
    let d = dev_label(case, i, j);
    let nt = case.periods();
    let opts = &case.options;
    let retention = if !es && opts.tes_loss { s.retention } else { 1.0 };
    let sigma = match opts.soc_convention {
        SocConvention::Physical => 1.0,
        SocConvention::Literal => -1.0,
    };
    let (carrier, role, tags, soc_tags, rec, ini, end) = if es {
        (
            Carrier::Electric,
            "e",
            ("eta_lo_ES_e", "eta_bar_ES_e"),
            ("eta_lo_ES_SOC", "eta_bar_ES_SOC"),
            "gamma_ES",
            "gamma_ini_ES",
            "gamma_end_ES",
        )
    } else {
        (
            Carrier::Thermal,
            "h",
            ("eta_lo_TES_h", "eta_bar_TES_h"),
            ("eta_lo_TES_SOC", "eta_bar_TES_SOC"),
            "gamma_TES",
            "gamma_ini_TES",
            "gamma_end_TES",
        )
    };
    let mut b = ConstraintBlock::default();
    let soc0 = b.var(VarDef::new(var_name(&h.id, &d, "soc", 0, w), f64::NEG_INFINITY, f64::INFINITY, None));
    let mut prev = soc0;
    for t in 0..nt {
        let bid = if es { bids.e(i, j, t, w) } else { bids.h(i, j, t, w) };
        let p = b.var(seller(var_name(&h.id, &d, role, t + 1, w), -s.charge_max(), pmax, t, i, carrier, bid, 0.0).tags(tags.0, tags.1));
        let soc = b.var(VarDef::new(var_name(&h.id, &d, "soc", t + 1, w), s.soc_min, s.soc_max, Some(t)).tags(soc_tags.0, soc_tags.1));
        b.row(
            var_name(&h.id, &d, rec, t + 1, w),
            rec,
            vec![(soc, 1.0), (prev, -retention), (p, sigma * case.time.step / pmax)],
            RowKind::Eq,
            0.0,
        );
        prev = soc;
    }
    b.row(var_name(&h.id, &d, ini, 0, w), ini, vec![(soc0, 1.0)], RowKind::Eq, s.soc_ini);
    b.row(var_name(&h.id, &d, end, nt, w), end, vec![(prev, 1.0)], RowKind::Eq, s.soc_end);
    Ok(b)
}

/// Electrical boiler or heat pump `j` of H-MG `i`.
pub fn build_conversion_block(
    case: &CaseDefinition,
    i: usize,
    j: usize,
    bids: &BidVector,
    w: usize,
) -> Result<ConstraintBlock, DeviceError> {
    let h = &case.hmgs[i];
    let (c, tag, tags) = match &h.devices[j] {
        DeviceSpec::EB(c) => (c, "zeta_EB_h", ("eta_lo_EB_h", "eta_bar_EB_h")),
        DeviceSpec::EHP(c) => (c, "gamma_HP_h", ("eta_lo_EHP_h", "eta_bar_EHP_h")),
        _ => return Err(wrong(case, i, j)),
    };
    if !(c.efficiency > 0.0) {
        return Err(DeviceError::BadParameter { hmg: h.id.clone(), device: j, field: "efficiency" });
    }
    let d = dev_label(case, i, j);
    let mut b = ConstraintBlock::default();
    for t in 0..case.periods() {
        let price_e = bids.e(i, j, t, w);
        let mut pe = VarDef::new(var_name(&h.id, &d, "e", t + 1, w), f64::NEG_INFINITY, f64::INFINITY, Some(t));
        pe.cost = price_e;
        pe.profit.push((Player::Hmg(i), -price_e));
        pe.balance.push((Carrier::Electric, i, 1.0));
        let pe = b.var(pe);
        let ph = b.var(
            seller(var_name(&h.id, &d, "h", t + 1, w), 0.0, c.heat_max, t, i, Carrier::Thermal, bids.h(i, j, t, w), 0.0)
                .tags(tags.0, tags.1),
        );
        b.row(var_name(&h.id, &d, tag, t + 1, w), tag, vec![(ph, 1.0), (pe, -c.efficiency)], RowKind::Eq, 0.0);
    }
    Ok(b)
}

/// Retailer imports/exports of H-MG `i` with their share limits, and the
/// outgoing peer flows of both carriers.
pub fn build_exchange_block(case: &CaseDefinition, i: usize, w: usize) -> ConstraintBlock {
    let h = &case.hmgs[i];
    let eta = h.export_fraction;
    let nk = case.retailers.len();
    let mcp = &case.scenarios.mcp_forecast;
    let mut b = ConstraintBlock::default();
    for t in 0..case.periods() {
        let mut imp = Vec::with_capacity(nk);
        let mut exp = Vec::with_capacity(nk);
        for (k, r) in case.retailers.iter().enumerate() {
            let sell = r.sell_price.at(t, w);
            let mut v = VarDef::new(var_name(&h.id, &r.id, "import", t + 1, w), 0.0, r.capacity, Some(t)).tags("eta_lo_Grid_e_imp", "cap_Grid_e_imp");
            v.cost = -sell;
            v.profit = vec![(Player::Hmg(i), -sell), (Player::Retailer(k), sell)];
            v.balance.push((Carrier::Electric, i, -1.0));
            imp.push(b.var(v));
            let buy = r.buy_price.at(t, w);
            let mut v = VarDef::new(var_name(&h.id, &r.id, "export", t + 1, w), 0.0, r.capacity, Some(t)).tags("eta_lo_Grid_e_exp", "cap_Grid_e_exp");
            v.cost = buy;
            v.profit = vec![(Player::Hmg(i), buy), (Player::Retailer(k), -buy)];
            v.balance.push((Carrier::Electric, i, 1.0));
            exp.push(b.var(v));
        }
        for (cols, tag) in [(&imp, "eta_bar_Grid_e_imp"), (&exp, "eta_bar_Grid_e_exp")] {
            for k in 0..nk {
                let terms: Vec<(usize, f64)> = (0..nk)
                    .map(|k2| (cols[k2], if k2 == k { 1.0 - eta } else { -eta }))
                    .filter(|&(_, a)| a != 0.0)
                    .collect();
                if !terms.is_empty() {
                    let name = var_name(&h.id, &case.retailers[k].id, tag, t + 1, w);
                    b.row(name, tag, terms, RowKind::Le, 0.0);
                }
            }
        }
        let price = mcp.at(t, w);
        for (m, other) in case.hmgs.iter().enumerate() {
            if m == i {
                continue;
            }
            for (carrier, role) in [(Carrier::Electric, "flow_e"), (Carrier::Thermal, "flow_h")] {
                let mut v = VarDef::new(var_name(&h.id, &format!("link_{}", other.id), role, t + 1, w), 0.0, f64::INFINITY, Some(t));
                v.cost = -case.options.wheeling_cost;
                v.profit = vec![(Player::Hmg(i), price), (Player::Hmg(m), -price)];
                v.balance = vec![(carrier, i, 1.0), (carrier, m, -1.0)];
                v.lower_tag = Some("eta_lo_link");
                b.var(v);
            }
        }
    }
    b
}

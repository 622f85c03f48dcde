use super::{Ctx, KktError, KktOptions, Residual};
use crate::clearing::ClearingProblem;
use crate::devices::Carrier;
use crate::lp::LpSolution;
use crate::model::{CaseDefinition, DeviceSpec, SocConvention};

/// Derivative of the Lagrangian with respect to every clearing variable,
/// one residual per variable.
pub fn stationarity_residuals(
    case: &CaseDefinition,
    problem: &ClearingProblem,
    sol: &LpSolution,
    opts: &KktOptions,
) -> Result<Vec<Residual>, KktError> {
    let c = Ctx::new(case, problem, sol);
    let mut out = Vec::new();
    for i in 0..case.hmgs.len() {
        demand_response(&c, i, opts, &mut out)?;
        for j in 0..case.hmgs[i].devices.len() {
            device(&c, i, j, &mut out)?;
        }
        exchange(&c, i, &mut out)?;
    }
    Ok(out)
}

fn push(out: &mut Vec<Residual>, id: &'static str, index: String, value: f64) {
    out.push(Residual { id, index, value: value.abs() });
}

fn demand_response(c: &Ctx, i: usize, opts: &KktOptions, out: &mut Vec<Residual>) -> Result<(), KktError> {
    let nt = c.case.periods();
    let gamma: Vec<f64> = (0..nt).map(|t| c.y(&c.name(i, "DR", "gamma_D_e", t + 1))).collect::<Result<_, _>>()?;
    for t in 0..nt {
        let price = if opts.demand_thermal_pairing { Carrier::Thermal } else { Carrier::Electric };
        let lam = c.lambda(i, price, t)?;
        push(out, "demand", c.name(i, "DR", "load", t + 1), gamma[t] + lam);
    }
    for t in 0..nt {
        let cap = c.y_opt(&c.name(i, "DR", "eta_bar_D_e", t + 1));
        for t2 in 0..nt {
            let gain = c.forecast(t) - c.forecast(t2);
            if t2 == t || gain <= 0.0 {
                continue;
            }
            let name = c.name(i, "DR", &format!("shift_to{}", t2 + 1), t + 1);
            let (lo, _) = c.mu(&name)?;
            push(out, "dr_shift", name, 0.5 * gain - gamma[t] + gamma[t2] - cap + lo);
        }
    }
    Ok(())
}

fn device(c: &Ctx, i: usize, j: usize, out: &mut Vec<Residual>) -> Result<(), KktError> {
    let case = c.case;
    let nt = case.periods();
    let spec = &case.hmgs[i].devices[j];
    let d = format!("{}{}", spec.kind().tag(), j);
    let bids = &c.p.bids;
    let w = c.w;
    match spec {
        DeviceSpec::CHP(ch) => {
            for t in 0..nt {
                let g = c.y(&c.name(i, &d, "gamma_CHP_e", t + 1))?;
                let ne = c.name(i, &d, "e", t + 1);
                let (lo, hi) = c.mu(&ne)?;
                let r = bids.e(i, j, t, w) + hi - lo + g - c.lambda(i, Carrier::Electric, t)?;
                push(out, "chp_e", ne, r);
                let nh = c.name(i, &d, "h", t + 1);
                let (lo, hi) = c.mu(&nh)?;
                let r = bids.h(i, j, t, w) + hi - lo - g * ch.zeta_e / ch.zeta_h - c.lambda(i, Carrier::Thermal, t)?;
                push(out, "chp_h", nh, r);
            }
        }
        DeviceSpec::WT(_) | DeviceSpec::STP(_) | DeviceSpec::GB(_) => {
            let (id, role, carrier) = match spec {
                DeviceSpec::WT(_) => ("wt", "e", Carrier::Electric),
                DeviceSpec::STP(_) => ("stp", "h", Carrier::Thermal),
                _ => ("gb", "h", Carrier::Thermal),
            };
            for t in 0..nt {
                let n = c.name(i, &d, role, t + 1);
                let (lo, hi) = c.mu(&n)?;
                let bid = if carrier == Carrier::Electric { bids.e(i, j, t, w) } else { bids.h(i, j, t, w) };
                push(out, id, n, bid + hi - lo - c.lambda(i, carrier, t)?);
            }
        }
        DeviceSpec::ES(s) | DeviceSpec::TES(s) => {
            let es = matches!(spec, DeviceSpec::ES(_));
            let (carrier, role, rec, ini, end, pid, sid) = if es {
                (Carrier::Electric, "e", "gamma_ES", "gamma_ini_ES", "gamma_end_ES", "es_power", "es_soc")
            } else {
                (Carrier::Thermal, "h", "gamma_TES", "gamma_ini_TES", "gamma_end_TES", "tes_power", "tes_soc")
            };
            let sigma = match case.options.soc_convention {
                SocConvention::Physical => 1.0,
                SocConvention::Literal => -1.0,
            };
            let r = if !es && case.options.tes_loss { s.retention } else { 1.0 };
            let k = case.time.step / s.discharge_max();
            let gamma: Vec<f64> = (0..nt).map(|t| c.y(&c.name(i, &d, rec, t + 1))).collect::<Result<_, _>>()?;
            let g_ini = c.y(&c.name(i, &d, ini, 0))?;
            let g_end = c.y(&c.name(i, &d, end, nt))?;
            for t in 0..nt {
                let n = c.name(i, &d, role, t + 1);
                let (lo, hi) = c.mu(&n)?;
                let bid = if es { bids.e(i, j, t, w) } else { bids.h(i, j, t, w) };
                push(out, pid, n, bid + hi - lo + sigma * k * gamma[t] - c.lambda(i, carrier, t)?);
                let n = c.name(i, &d, "soc", t + 1);
                let (lo, hi) = c.mu(&n)?;
                let next = if t + 1 < nt { r * gamma[t + 1] } else { 0.0 };
                let anchor = if t + 1 == nt { g_end } else { 0.0 };
                push(out, sid, n, gamma[t] - next + anchor + hi - lo);
            }
            let first = if nt > 0 { gamma[0] } else { g_end };
            push(out, if es { "es_soc_initial" } else { "tes_soc_initial" }, c.name(i, &d, "soc", 0), g_ini - r * first);
        }
        DeviceSpec::EB(cv) | DeviceSpec::EHP(cv) => {
            let eb = matches!(spec, DeviceSpec::EB(_));
            let (tag, hid, eid) = if eb { ("zeta_EB_h", "eb_heat", "eb_elec") } else { ("gamma_HP_h", "ehp_heat", "ehp_elec") };
            for t in 0..nt {
                let g = c.y(&c.name(i, &d, tag, t + 1))?;
                let nh = c.name(i, &d, "h", t + 1);
                let (lo, hi) = c.mu(&nh)?;
                push(out, hid, nh, bids.h(i, j, t, w) + g + hi - lo - c.lambda(i, Carrier::Thermal, t)?);
                let ne = c.name(i, &d, "e", t + 1);
                push(out, eid, ne, -bids.e(i, j, t, w) - cv.efficiency * g + c.lambda(i, Carrier::Electric, t)?);
            }
        }
    }
    Ok(())
}

fn exchange(c: &Ctx, i: usize, out: &mut Vec<Residual>) -> Result<(), KktError> {
    let case = c.case;
    let h = &case.hmgs[i];
    let eta = h.export_fraction;
    for t in 0..case.periods() {
        let lam = c.lambda(i, Carrier::Electric, t)?;
        for (dir, tag) in [("import", "eta_bar_Grid_e_imp"), ("export", "eta_bar_Grid_e_exp")] {
            let nu: Vec<f64> = case.retailers.iter().map(|r| c.y_opt(&c.name(i, &r.id, tag, t + 1))).collect();
            let total: f64 = nu.iter().sum();
            for (k, r) in case.retailers.iter().enumerate() {
                let n = c.name(i, &r.id, dir, t + 1);
                let (lo, hi) = c.mu(&n)?;
                let share = (1.0 - eta) * nu[k] - eta * (total - nu[k]);
                let value = if dir == "import" {
                    r.sell_price.at(t, c.w) - lam + share + hi - lo
                } else {
                    r.buy_price.at(t, c.w) - lam - share - hi + lo
                };
                push(out, if dir == "import" { "import" } else { "export" }, n, value);
            }
        }
        for (m, other) in case.hmgs.iter().enumerate() {
            if m == i {
                continue;
            }
            for (carrier, role, id) in [(Carrier::Electric, "flow_e", "link_e"), (Carrier::Thermal, "flow_h", "link_h")] {
                let n = c.name(i, &format!("link_{}", other.id), role, t + 1);
                let (lo, _) = c.mu(&n)?;
                let v = case.options.wheeling_cost + c.lambda(i, carrier, t)? - c.lambda(m, carrier, t)? - lo;
                push(out, id, n, v);
            }
        }
    }
    Ok(())
}

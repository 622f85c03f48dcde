use super::{Ctx, KktError, Residual};
use crate::clearing::ClearingProblem;
use crate::devices::Carrier;
use crate::lp::LpSolution;
use crate::model::{CaseDefinition, DeviceSpec, SocConvention};

const SIGN_TOL: f64 = 1e-9;

/// Pushes the lower and upper bound pairs of one column. A negative slack or
/// multiplier is reported as its own magnitude so that it fails the check.
fn bounds(c: &Ctx, out: &mut Vec<Residual>, ids: (&'static str, &'static str), name: String, lo: f64, hi: f64) -> Result<(), KktError> {
    let x = c.x(&name)?;
    let (ml, mh) = c.mu(&name)?;
    pair(out, ids.0, name.clone(), x - lo, ml);
    pair(out, ids.1, name, hi - x, mh);
    Ok(())
}

fn pair(out: &mut Vec<Residual>, id: &'static str, index: String, slack: f64, mult: f64) {
    let value = if slack < -SIGN_TOL || mult < -SIGN_TOL {
        slack.min(mult).abs().max((slack * mult).abs())
    } else {
        (slack * mult).abs()
    };
    out.push(Residual { id, index, value });
}

/// Multipliers of infinite bounds, which must vanish.
fn free(c: &Ctx, out: &mut Vec<Residual>, id: &'static str, name: String, below: bool) -> Result<(), KktError> {
    let (ml, mh) = c.mu(&name)?;
    out.push(Residual { id, index: name, value: mh + if below { ml } else { 0.0 } });
    Ok(())
}

/// `slack * multiplier` for every inequality of the clearing problem.
pub fn complementarity_residuals(case: &CaseDefinition, problem: &ClearingProblem, sol: &LpSolution) -> Result<Vec<Residual>, KktError> {
    let c = Ctx::new(case, problem, sol);
    let nt = case.periods();
    let mut out = Vec::new();
    for (i, h) in case.hmgs.iter().enumerate() {
        for t in 0..nt {
            free(&c, &mut out, "dr_load_free", c.name(i, "DR", "load", t + 1), true)?;
            let mut shifted = 0.0;
            let mut any = false;
            for t2 in 0..nt {
                if t2 == t || c.forecast(t) <= c.forecast(t2) {
                    continue;
                }
                let name = c.name(i, "DR", &format!("shift_to{}", t2 + 1), t + 1);
                let x = c.x(&name)?;
                shifted += x;
                any = true;
                let (ml, _) = c.mu(&name)?;
                pair(&mut out, "dr_shift_lower", name.clone(), x, ml);
                free(&c, &mut out, "dr_shift_upper", name, false)?;
            }
            if any {
                let row = c.name(i, "DR", "eta_bar_D_e", t + 1);
                let y = c.y(&row)?;
                pair(&mut out, "dr_shift_cap", row, h.load.at(t, c.w) - shifted, y);
            }
        }
        for (j, spec) in h.devices.iter().enumerate() {
            let d = format!("{}{}", spec.kind().tag(), j);
            if matches!(spec, DeviceSpec::ES(_) | DeviceSpec::TES(_)) {
                free(&c, &mut out, "storage_soc_initial_free", c.name(i, &d, "soc", 0), true)?;
            }
            for t in 0..nt {
                let n = |role: &str| c.name(i, &d, role, t + 1);
                match spec {
                    DeviceSpec::CHP(ch) => {
                        bounds(&c, &mut out, ("chp_e_lower", "chp_e_upper"), n("e"), ch.pe_min, ch.pe_max)?;
                        bounds(&c, &mut out, ("chp_h_lower", "chp_h_upper"), n("h"), ch.ph_min, ch.ph_max)?;
                    }
                    DeviceSpec::WT(r) | DeviceSpec::STP(r) => {
                        let cap = r.capacity * r.availability.as_ref().map_or(1.0, |a| a.at(t, c.w));
                        if matches!(spec, DeviceSpec::WT(_)) {
                            bounds(&c, &mut out, ("wt_lower", "wt_upper"), n("e"), 0.0, cap)?;
                        } else {
                            bounds(&c, &mut out, ("stp_lower", "stp_upper"), n("h"), 0.0, cap)?;
                        }
                    }
                    DeviceSpec::ES(s) => {
                        bounds(&c, &mut out, ("es_power_lower", "es_power_upper"), n("e"), -s.charge_max(), s.discharge_max())?;
                        bounds(&c, &mut out, ("es_soc_lower", "es_soc_upper"), n("soc"), s.soc_min, s.soc_max)?;
                    }
                    DeviceSpec::TES(s) => {
                        bounds(&c, &mut out, ("tes_power_lower", "tes_power_upper"), n("h"), -s.charge_max(), s.discharge_max())?;
                        bounds(&c, &mut out, ("tes_soc_lower", "tes_soc_upper"), n("soc"), s.soc_min, s.soc_max)?;
                    }
                    DeviceSpec::EB(cv) => {
                        bounds(&c, &mut out, ("eb_lower", "eb_upper"), n("h"), 0.0, cv.heat_max)?;
                        free(&c, &mut out, "conversion_input_free", n("e"), true)?;
                    }
                    DeviceSpec::EHP(cv) => {
                        bounds(&c, &mut out, ("ehp_lower", "ehp_upper"), n("h"), 0.0, cv.heat_max)?;
                        free(&c, &mut out, "conversion_input_free", n("e"), true)?;
                    }
                    DeviceSpec::GB(g) => bounds(&c, &mut out, ("gb_lower", "gb_upper"), n("h"), 0.0, g.heat_max)?,
                }
            }
        }
        let eta = h.export_fraction;
        for t in 0..nt {
            for (dir, tag, ids) in [
                ("import", "eta_bar_Grid_e_imp", ("grid_import_lower", "grid_import_upper")),
                ("export", "eta_bar_Grid_e_exp", ("grid_export_lower", "grid_export_upper")),
            ] {
                let mut xs = Vec::new();
                for r in &case.retailers {
                    let name = c.name(i, &r.id, dir, t + 1);
                    xs.push(c.x(&name)?);
                    bounds(&c, &mut out, ids, name, 0.0, r.capacity)?;
                }
                let total: f64 = xs.iter().sum();
                for (k, r) in case.retailers.iter().enumerate() {
                    let row = c.name(i, &r.id, tag, t + 1);
                    if let Some(ri) = problem.row(&row) {
                        let slack = eta * total - xs[k];
                        pair(&mut out, if dir == "import" { "grid_import_share" } else { "grid_export_share" }, row, slack, sol.row_duals[ri]);
                    }
                }
            }
            for (m, other) in case.hmgs.iter().enumerate() {
                if m != i {
                    for role in ["flow_e", "flow_h"] {
                        let name = c.name(i, &format!("link_{}", other.id), role, t + 1);
                        let x = c.x(&name)?;
                        let (ml, mh) = c.mu(&name)?;
                        pair(&mut out, "link_lower", name.clone(), x, ml);
                        // no upper bound: its multiplier must vanish
                        out.push(Residual { id: "link_upper", index: name, value: mh });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Violations of the primal equalities and inequalities, each scaled by
/// `1 + |right-hand side|`.
pub fn primal_residuals(case: &CaseDefinition, problem: &ClearingProblem, sol: &LpSolution) -> Result<Vec<Residual>, KktError> {
    let c = Ctx::new(case, problem, sol);
    let w = c.w;
    let nt = case.periods();
    let n = case.hmgs.len();
    let mut out = Vec::new();
    let mut push = |id: &'static str, index: String, v: f64, scale: f64| out.push(Residual { id, index, value: v.abs() / (1.0 + scale.abs()) });
    // net demand minus supply per (carrier, hmg, t)
    let mut net = [vec![vec![0.0; nt]; n], vec![vec![0.0; nt]; n]];
    for (i, h) in case.hmgs.iter().enumerate() {
        let mut load = vec![0.0; nt];
        let mut out_shift = vec![0.0; nt];
        let mut in_shift = vec![0.0; nt];
        for t in 0..nt {
            load[t] = c.x(&c.name(i, "DR", "load", t + 1))?;
            for t2 in 0..nt {
                if t2 != t && c.forecast(t) > c.forecast(t2) {
                    let x = c.x(&c.name(i, "DR", &format!("shift_to{}", t2 + 1), t + 1))?;
                    out_shift[t] += x;
                    in_shift[t2] += x;
                }
            }
        }
        for t in 0..nt {
            let p = h.load.at(t, w);
            push("dr_load_definition", c.name(i, "DR", "gamma_D_e", t + 1), load[t] + out_shift[t] - in_shift[t] - p, p);
            push("dr_shift_cap", c.name(i, "DR", "eta_bar_D_e", t + 1), (out_shift[t] - p).max(0.0), p);
            net[0][i][t] += load[t];
            net[1][i][t] += h.heat_load.at(t, w);
        }
        for (j, spec) in h.devices.iter().enumerate() {
            let d = format!("{}{}", spec.kind().tag(), j);
            let x = |role: &str, t: usize| c.x(&c.name(i, &d, role, t));
            match spec {
                DeviceSpec::CHP(ch) => {
                    for t in 0..nt {
                        let (pe, ph) = (x("e", t + 1)?, x("h", t + 1)?);
                        push("chp_coupling", c.name(i, &d, "gamma_CHP_e", t + 1), pe - ch.zeta_e / ch.zeta_h * ph - ch.zeta_offset, ch.zeta_offset);
                        push("chp_e_bounds", c.name(i, &d, "e", t + 1), (ch.pe_min - pe).max(pe - ch.pe_max).max(0.0), ch.pe_max);
                        push("chp_h_bounds", c.name(i, &d, "h", t + 1), (ch.ph_min - ph).max(ph - ch.ph_max).max(0.0), ch.ph_max);
                        net[0][i][t] -= pe;
                        net[1][i][t] -= ph;
                    }
                }
                DeviceSpec::WT(r) | DeviceSpec::STP(r) => {
                    let wt = matches!(spec, DeviceSpec::WT(_));
                    for t in 0..nt {
                        let cap = r.capacity * r.availability.as_ref().map_or(1.0, |a| a.at(t, w));
                        let v = x(if wt { "e" } else { "h" }, t + 1)?;
                        push(if wt { "wt_bounds" } else { "stp_bounds" }, c.name(i, &d, if wt { "e" } else { "h" }, t + 1), (-v).max(v - cap).max(0.0), cap);
                        net[usize::from(!wt)][i][t] -= v;
                    }
                }
                DeviceSpec::GB(g) => {
                    for t in 0..nt {
                        let v = x("h", t + 1)?;
                        push("gb_bounds", c.name(i, &d, "h", t + 1), (-v).max(v - g.heat_max).max(0.0), g.heat_max);
                        net[1][i][t] -= v;
                    }
                }
                DeviceSpec::ES(s) | DeviceSpec::TES(s) => {
                    let es = matches!(spec, DeviceSpec::ES(_));
                    let (role, carrier) = if es { ("e", 0) } else { ("h", 1) };
                    let sigma = if case.options.soc_convention == SocConvention::Physical { 1.0 } else { -1.0 };
                    let r = if !es && case.options.tes_loss { s.retention } else { 1.0 };
                    let pmax = s.discharge_max();
                    let (rec, ini, end) = if es { ("gamma_ES", "gamma_ini_ES", "gamma_end_ES") } else { ("gamma_TES", "gamma_ini_TES", "gamma_end_TES") };
                    let mut prev = x("soc", 0)?;
                    push("storage_initial", c.name(i, &d, ini, 0), prev - s.soc_ini, s.soc_ini);
                    for t in 0..nt {
                        let p = x(role, t + 1)?;
                        let soc = x("soc", t + 1)?;
                        push("storage_recursion", c.name(i, &d, rec, t + 1), soc - r * prev + sigma * case.time.step * p / pmax, 1.0);
                        push("storage_power_bounds", c.name(i, &d, role, t + 1), (-s.charge_max() - p).max(p - pmax).max(0.0), pmax);
                        push("storage_soc_bounds", c.name(i, &d, "soc", t + 1), (s.soc_min - soc).max(soc - s.soc_max).max(0.0), 1.0);
                        net[carrier][i][t] -= p;
                        prev = soc;
                    }
                    push("storage_terminal", c.name(i, &d, end, nt), prev - s.soc_end, s.soc_end);
                }
                DeviceSpec::EB(cv) | DeviceSpec::EHP(cv) => {
                    let tag = if matches!(spec, DeviceSpec::EB(_)) { "zeta_EB_h" } else { "gamma_HP_h" };
                    for t in 0..nt {
                        let (pe, ph) = (x("e", t + 1)?, x("h", t + 1)?);
                        push("conversion_coupling", c.name(i, &d, tag, t + 1), ph - cv.efficiency * pe, 0.0);
                        push("conversion_bounds", c.name(i, &d, "h", t + 1), (-ph).max(ph - cv.heat_max).max(0.0), cv.heat_max);
                        net[0][i][t] += pe;
                        net[1][i][t] -= ph;
                    }
                }
            }
        }
        for t in 0..nt {
            for (dir, tag, sign) in [("import", "eta_bar_Grid_e_imp", -1.0), ("export", "eta_bar_Grid_e_exp", 1.0)] {
                let xs: Vec<f64> = case.retailers.iter().map(|r| c.x(&c.name(i, &r.id, dir, t + 1))).collect::<Result<_, _>>()?;
                let total: f64 = xs.iter().sum();
                for (k, r) in case.retailers.iter().enumerate() {
                    push("grid_bounds", c.name(i, &r.id, dir, t + 1), (-xs[k]).max(xs[k] - r.capacity).max(0.0), r.capacity);
                    push("grid_share", c.name(i, &r.id, tag, t + 1), (xs[k] - h.export_fraction * total).max(0.0), total);
                    net[0][i][t] += sign * xs[k];
                }
            }
            for (m, other) in case.hmgs.iter().enumerate() {
                if m != i {
                    for (k, role) in [(0, "flow_e"), (1, "flow_h")] {
                        let f = c.x(&c.name(i, &format!("link_{}", other.id), role, t + 1))?;
                        push("link_bounds", c.name(i, &format!("link_{}", other.id), role, t + 1), (-f).max(0.0), 0.0);
                        net[k][i][t] += f;
                        net[k][m][t] -= f;
                    }
                }
            }
        }
    }
    for (i, h) in case.hmgs.iter().enumerate() {
        for t in 0..nt {
            for (k, carrier) in [(0, Carrier::Electric), (1, Carrier::Thermal)] {
                let scale = if k == 0 { h.load.at(t, w) } else { h.heat_load.at(t, w) };
                let id = if k == 0 { "balance_e" } else { "balance_h" };
                push(id, crate::clearing::balance_name(&h.id, carrier, t, w), net[k][i][t], scale);
            }
        }
    }
    Ok(out)
}

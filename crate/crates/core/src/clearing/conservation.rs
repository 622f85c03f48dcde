use super::ClearingProblem;
use crate::devices::{dev_label, var_name, Player};
use crate::lp::LpSolution;
use crate::model::{CaseDefinition, DeviceSpec};

/// Largest residual of each identity every optimal clear must satisfy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Conservation {
    /// Served minus predicted energy over the horizon, relative to the prediction.
    pub load_shift: f64,
    /// Distance of the first and last state of charge from their anchors.
    pub soc_anchor: f64,
    /// CHP, boiler and heat-pump input/output relations.
    pub coupling: f64,
    /// Net payment on any peer link (buyer plus seller side).
    pub link_netting: f64,
}

impl Conservation {
    pub fn max(&self) -> f64 {
        self.load_shift.max(self.soc_anchor).max(self.coupling).max(self.link_netting)
    }
}

pub fn conservation(case: &CaseDefinition, p: &ClearingProblem, sol: &LpSolution) -> Conservation {
    let w = p.w;
    let nt = case.periods();
    let x = |name: String| p.col(&name).map_or(0.0, |j| sol.x[j]);
    let mut c = Conservation::default();
    for (i, h) in case.hmgs.iter().enumerate() {
        let served: f64 = (0..nt).map(|t| x(var_name(&h.id, "DR", "load", t + 1, w))).sum();
        let predicted: f64 = (0..nt).map(|t| h.load.at(t, w)).sum();
        c.load_shift = c.load_shift.max((served - predicted).abs() / (1.0 + predicted));
        for (j, d) in h.devices.iter().enumerate() {
            let lab = dev_label(case, i, j);
            let v = |role: &str, t: usize| x(var_name(&h.id, &lab, role, t, w));
            match d {
                DeviceSpec::ES(s) | DeviceSpec::TES(s) => {
                    c.soc_anchor = c.soc_anchor.max((v("soc", 0) - s.soc_ini).abs()).max((v("soc", nt) - s.soc_end).abs());
                }
                DeviceSpec::CHP(ch) => {
                    for t in 1..=nt {
                        let (pe, ph) = (v("e", t), v("h", t));
                        let r = pe - ch.zeta_e / ch.zeta_h * ph - ch.zeta_offset;
                        c.coupling = c.coupling.max(r.abs() / (1.0 + pe.abs()));
                    }
                }
                DeviceSpec::EB(cv) | DeviceSpec::EHP(cv) => {
                    for t in 1..=nt {
                        let (pe, ph) = (v("e", t), v("h", t));
                        c.coupling = c.coupling.max((ph - cv.efficiency * pe).abs() / (1.0 + ph.abs()));
                    }
                }
                _ => {}
            }
        }
    }
    for (v, &xv) in p.vars.iter().zip(&sol.x) {
        let hmg: Vec<f64> = v.profit.iter().filter(|(q, _)| matches!(q, Player::Hmg(_))).map(|&(_, a)| a).collect();
        if hmg.len() == 2 {
            c.link_netting = c.link_netting.max(((hmg[0] + hmg[1]) * xv).abs());
        }
    }
    c
}

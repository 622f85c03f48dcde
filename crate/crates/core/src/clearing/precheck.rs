use super::ClearingError;
use crate::model::{CaseDefinition, DeviceSpec};

fn supply(case: &CaseDefinition, i: usize, t: usize, w: usize) -> (f64, f64) {
    let (mut e, mut h) = (0.0, 0.0);
    for d in &case.hmgs[i].devices {
        match d {
            DeviceSpec::CHP(c) => {
                e += c.pe_max;
                h += c.ph_max;
            }
            DeviceSpec::WT(r) => e += r.capacity * r.availability.as_ref().map_or(1.0, |a| a.at(t, w)),
            DeviceSpec::STP(r) => h += r.capacity * r.availability.as_ref().map_or(1.0, |a| a.at(t, w)),
            DeviceSpec::ES(s) => e += s.discharge_max(),
            DeviceSpec::TES(s) => h += s.discharge_max(),
            DeviceSpec::EB(c) | DeviceSpec::EHP(c) => h += c.heat_max,
            DeviceSpec::GB(g) => h += g.heat_max,
        }
    }
    (e, h)
}

/// Rejects scenarios whose demand cannot be met by any dispatch: thermal
/// demand above the neighbourhood's thermal capacity in some period, or
/// electrical energy above what local generation can deliver when no
/// retailer is connected.
pub fn check(case: &CaseDefinition, w: usize) -> Result<(), ClearingError> {
    let n = case.hmgs.len();
    let nt = case.periods();
    let caps: Vec<Vec<(f64, f64)>> = (0..n).map(|i| (0..nt).map(|t| supply(case, i, t, w)).collect()).collect();
    for t in 0..nt {
        let total_cap: f64 = caps.iter().map(|c| c[t].1).sum();
        let total_dem: f64 = case.hmgs.iter().map(|h| h.heat_load.at(t, w)).sum();
        if total_dem > total_cap + 1e-9 {
            let i = (0..n).find(|&i| case.hmgs[i].heat_load.at(t, w) > caps[i][t].1).unwrap_or(0);
            return Err(ClearingError::Unservable { hmg: case.hmgs[i].id.clone(), balance: "thermal", t: t + 1, w: w + 1 });
        }
    }
    let grid = case.retailers.iter().any(|r| r.capacity > 0.0);
    if !grid {
        let energy: f64 = caps.iter().flat_map(|c| c.iter().map(|x| x.0)).sum::<f64>();
        let load: f64 = case.hmgs.iter().map(|h| (0..nt).map(|t| h.load.at(t, w)).sum::<f64>()).sum();
        if load > energy + 1e-9 {
            for t in 0..nt {
                if let Some(i) = (0..n).find(|&i| case.hmgs[i].load.at(t, w) > caps[i][t].0) {
                    return Err(ClearingError::Unservable { hmg: case.hmgs[i].id.clone(), balance: "electrical", t: t + 1, w: w + 1 });
                }
            }
        }
    }
    Ok(())
}

use std::ops::Deref;

use thiserror::Error;

use super::{CaseDefinition, DeviceKind, DeviceSpec, Series, SocConvention, StorageSpec};

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{location}: {message}")]
pub struct ValidationError {
    pub location: String,
    pub message: String,
}

fn err<T>(location: impl Into<String>, message: impl Into<String>) -> Result<T, ValidationError> {
    Err(ValidationError { location: location.into(), message: message.into() })
}

/// A case whose invariants have been checked. Weights are normalized and
/// every storage device has a resolved power limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedCase(CaseDefinition);

impl Deref for ValidatedCase {
    type Target = CaseDefinition;
    fn deref(&self) -> &CaseDefinition {
        &self.0
    }
}

impl ValidatedCase {
    pub fn into_inner(self) -> CaseDefinition {
        self.0
    }

    pub fn weight(&self, w: usize) -> f64 {
        self.0.scenarios.weights[w]
    }
}

/// Shortest decimal with at most 12 significant digits.
fn short(v: f64) -> String {
    let s = format!("{:.12e}", v);
    let parsed: f64 = s.parse().unwrap_or(v);
    format!("{parsed}")
}

fn check_series(
    s: &Series,
    w: usize,
    t: usize,
    loc: &str,
    range: Option<(f64, f64)>,
) -> Result<(), ValidationError> {
    if s.0.len() != w {
        return err(loc, format!("expected {w} scenario columns, found {}", s.0.len()));
    }
    for (wi, col) in s.0.iter().enumerate() {
        if col.len() != t {
            return err(format!("{loc}[w={}]", wi + 1), format!("expected {t} periods, found {}", col.len()));
        }
        for (ti, &v) in col.iter().enumerate() {
            let ok = v.is_finite() && v >= 0.0 && range.map_or(true, |(lo, hi)| v >= lo && v <= hi);
            if !ok {
                return err(format!("{loc}[t={},w={}]", ti + 1, wi + 1), format!("value {v} out of range"));
            }
        }
    }
    Ok(())
}

fn nonneg(v: f64, loc: &str, field: &str) -> Result<(), ValidationError> {
    if !(v.is_finite() && v >= 0.0) {
        return err(format!("{loc}.{field}"), format!("must be finite and nonnegative, got {v}"));
    }
    Ok(())
}

fn efficiency(v: f64, loc: &str, field: &str) -> Result<(), ValidationError> {
    if !(v > 0.0 && v <= 1.5) {
        return err(format!("{loc}.{field}"), format!("efficiency {v} outside (0, 1.5]"));
    }
    Ok(())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn validate_case(raw: CaseDefinition) -> Result<ValidatedCase, ValidationError> {
    let mut case = raw;
    if case.hmgs.is_empty() {
        return err("hmgs", "no H-MGs");
    }
    let t = case.time.periods;
    if t == 0 {
        return err("time.periods", "must be at least 1");
    }
    if !(case.time.step > 0.0 && case.time.step.is_finite()) {
        return err("time.step", "must be positive");
    }
    let w = case.scenarios.mcp_forecast.scenarios();
    if w == 0 {
        return err("scenarios.mcp_forecast", "no scenarios");
    }
    check_series(&case.scenarios.mcp_forecast, w, t, "scenarios.mcp_forecast", None)?;

    let weights = &mut case.scenarios.weights;
    if weights.is_empty() {
        *weights = vec![1.0 / w as f64; w];
    }
    if weights.len() != w {
        return err("scenarios.weights", format!("expected {w} weights, found {}", weights.len()));
    }
    if let Some(i) = weights.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
        return err(format!("scenarios.weights[{}]", i + 1), "must be finite and nonnegative");
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return err("scenarios.weights", format!("weights sum {}", short(sum)));
    }
    weights.iter_mut().for_each(|p| *p /= sum);

    if case.bid_levels == 0 {
        return err("bid_levels", "must be at least 1");
    }
    let tol = &case.tolerances;
    for (name, v) in [("stationarity", tol.stationarity), ("complementarity", tol.complementarity), ("nash", tol.nash)] {
        if !(v > 0.0 && v.is_finite()) {
            return err(format!("tolerances.{name}"), "must be positive");
        }
    }
    if !(case.options.tes_energy_density > 0.0 && case.options.tes_energy_density.is_finite()) {
        return err("options.tes_energy_density", "must be positive");
    }
    nonneg(case.options.wheeling_cost, "options", "wheeling_cost")?;

    let mut seen: Vec<&str> = Vec::new();
    for h in &case.hmgs {
        if !valid_id(&h.id) || seen.contains(&h.id.as_str()) {
            return err(format!("hmgs[{}]", h.id), "ids must be unique and alphanumeric");
        }
        seen.push(&h.id);
    }
    let opts = case.options.clone();
    for h in &mut case.hmgs {
        let loc = format!("hmgs[{}]", h.id);
        check_series(&h.load, w, t, &format!("{loc}.load"), None)?;
        check_series(&h.heat_load, w, t, &format!("{loc}.heat_load"), None)?;
        if !(0.0..=1.0).contains(&h.export_fraction) {
            return err(format!("{loc}.export_fraction"), "must lie in [0, 1]");
        }
        for (j, dev) in h.devices.iter_mut().enumerate() {
            let dloc = format!("{loc}.devices[{j}]");
            let is_tes = dev.kind() == DeviceKind::TES;
            match dev {
                DeviceSpec::CHP(c) => {
                    for (f, v) in [("pe_min", c.pe_min), ("pe_max", c.pe_max), ("ph_min", c.ph_min), ("ph_max", c.ph_max), ("fuel_price", c.fuel_price)] {
                        nonneg(v, &dloc, f)?;
                    }
                    if c.pe_min > c.pe_max || c.ph_min > c.ph_max {
                        return err(&dloc, "lower capacity exceeds upper capacity");
                    }
                    efficiency(c.zeta_e, &dloc, "zeta_e")?;
                    efficiency(c.zeta_h, &dloc, "zeta_h")?;
                    efficiency(c.n_heat, &dloc, "n_heat")?;
                    if !c.zeta_offset.is_finite() {
                        return err(format!("{dloc}.zeta_offset"), "must be finite");
                    }
                    let r = c.zeta_e / c.zeta_h;
                    let lo = c.ph_min.max((c.pe_min - c.zeta_offset) / r);
                    let hi = c.ph_max.min((c.pe_max - c.zeta_offset) / r);
                    if lo > hi + 1e-9 {
                        return err(&dloc, "coupling line misses the capacity box");
                    }
                }
                DeviceSpec::WT(r) | DeviceSpec::STP(r) => {
                    nonneg(r.capacity, &dloc, "capacity")?;
                    if let Some(a) = &r.availability {
                        check_series(a, w, t, &format!("{dloc}.availability"), Some((0.0, 1.0)))?;
                    }
                }
                DeviceSpec::ES(s) | DeviceSpec::TES(s) => {
                    validate_storage(s, is_tes, &opts, t, &dloc)?;
                }
                DeviceSpec::EB(c) => {
                    nonneg(c.heat_max, &dloc, "heat_max")?;
                    efficiency(c.efficiency, &dloc, "efficiency")?;
                }
                DeviceSpec::EHP(c) => {
                    nonneg(c.heat_max, &dloc, "heat_max")?;
                    if !(c.efficiency >= 1.0 && c.efficiency.is_finite()) {
                        return err(format!("{dloc}.efficiency"), format!("COP {} below 1", c.efficiency));
                    }
                }
                DeviceSpec::GB(g) => {
                    nonneg(g.heat_max, &dloc, "heat_max")?;
                    nonneg(g.fuel_price, &dloc, "fuel_price")?;
                    efficiency(g.n_fuel, &dloc, "n_fuel")?;
                }
            }
        }
    }

    let mut rids: Vec<&str> = Vec::new();
    for r in &case.retailers {
        let loc = format!("retailers[{}]", r.id);
        if !valid_id(&r.id) || rids.contains(&r.id.as_str()) {
            return err(loc, "ids must be unique and alphanumeric");
        }
        rids.push(&r.id);
        check_series(&r.sell_price, w, t, &format!("{loc}.sell_price"), None)?;
        check_series(&r.buy_price, w, t, &format!("{loc}.buy_price"), None)?;
        nonneg(r.capacity, &loc, "capacity")?;
        for wi in 0..w {
            for ti in 0..t {
                if r.buy_price.at(ti, wi) > r.sell_price.at(ti, wi) {
                    return err(format!("{loc}.buy_price[t={},w={}]", ti + 1, wi + 1), "exceeds sell price");
                }
            }
        }
    }
    Ok(ValidatedCase(case))
}

fn validate_storage(
    s: &mut StorageSpec,
    is_tes: bool,
    opts: &super::ModelOptions,
    t: usize,
    loc: &str,
) -> Result<(), ValidationError> {
    if s.p_max.is_none() && is_tes {
        if let Some(v) = s.volume_m3 {
            nonneg(v, loc, "volume_m3")?;
            s.p_max = Some(v * opts.tes_energy_density);
        }
    }
    let Some(p) = s.p_max else {
        return err(format!("{loc}.p_max"), "missing power limit");
    };
    if !(p > 0.0 && p.is_finite()) {
        return err(format!("{loc}.p_max"), "must be positive");
    }
    nonneg(s.charge_max(), loc, "p_charge_max")?;
    let (lo, hi) = (s.soc_min, s.soc_max);
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return err(format!("{loc}.soc_min"), "SOC bounds must satisfy 0 <= min <= max <= 1");
    }
    for (f, v) in [("soc_ini", s.soc_ini), ("soc_end", s.soc_end)] {
        if !(v >= lo && v <= hi) {
            return err(format!("{loc}.{f}"), format!("{v} outside SOC bounds"));
        }
    }
    if !(s.retention > 0.0 && s.retention <= 1.0) {
        return err(format!("{loc}.retention"), "must lie in (0, 1]");
    }
    // Reachable SOC interval, one period at a time.
    let r = if is_tes && opts.tes_loss { s.retention } else { 1.0 };
    let (dmin, dmax) = match opts.soc_convention {
        SocConvention::Physical => (-1.0, s.charge_max() / p),
        SocConvention::Literal => (-s.charge_max() / p, 1.0),
    };
    let (mut a, mut b) = (s.soc_ini, s.soc_ini);
    for k in 1..=t {
        a = (r * a + dmin).max(lo);
        b = (r * b + dmax).min(hi);
        if a > b + 1e-12 {
            return err(loc, format!("no feasible SOC at period {k}"));
        }
    }
    if s.soc_end < a - 1e-12 || s.soc_end > b + 1e-12 {
        return err(format!("{loc}.soc_end"), "unreachable within the horizon");
    }
    Ok(())
}

//! The three-H-MG reference neighbourhood with synthetic 24-period profiles.
//!
//! Capacities follow the reference equipment list; every time series below is
//! synthetic (two-peak loads, midday solar, nocturnal wind) and carries no
//! measured data.

use std::f64::consts::PI;

use super::*;

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn bump(t: f64, centre: f64, width: f64) -> f64 {
    let d = (t - centre) / width;
    (-0.5 * d * d).exp()
}

fn profile(w: usize, f: impl Fn(f64, usize) -> f64) -> Series {
    Series((0..w).map(|wi| (0..24).map(|t| round4(f(t as f64 + 0.5, wi))).collect()).collect())
}

/// Two-peak shape in [0, 1]: morning and evening.
fn two_peak(t: f64) -> f64 {
    0.35 + 0.4 * bump(t, 8.0, 1.8) + 0.6 * bump(t, 19.0, 2.2)
}

pub fn table1_case() -> CaseDefinition {
    let w = 2;
    // Scenario 2: higher prices and demand, calmer wind.
    let scale = [1.0, 1.15];
    let mcp = profile(w, |t, wi| scale[wi] * (0.05 + 0.09 * two_peak(t)));
    let load = |base: f64| profile(w, move |t, wi| base * scale[wi] * two_peak(t));
    let heat = |base: f64| profile(w, move |t, wi| base * scale[wi] * (0.7 + 0.3 * (2.0 * PI * (t - 3.0) / 24.0).cos()));
    let wind = profile(w, |t, wi| [0.9, 0.6][wi] * (0.55 + 0.45 * (2.0 * PI * t / 24.0).cos()).clamp(0.0, 1.0));
    let sun = profile(w, |t, wi| [1.0, 0.8][wi] * bump(t, 13.0, 2.5) * if (6.0..20.0).contains(&t) { 1.0 } else { 0.0 });

    let gb = || DeviceSpec::GB(BoilerSpec { heat_max: 150.0, n_fuel: 0.9, fuel_price: 0.03 });
    let eb = || DeviceSpec::EB(ConversionSpec { heat_max: 100.0, efficiency: 0.98 });
    let hmg_a = HmgSpec {
        id: "A".into(),
        devices: vec![
            DeviceSpec::CHP(ChpSpec {
                pe_min: 0.0,
                pe_max: 142.0,
                ph_min: 0.0,
                ph_max: 104.0,
                zeta_e: 0.355,
                zeta_h: 0.26,
                zeta_offset: 0.0,
                n_heat: 0.45,
                fuel_price: 0.03,
            }),
            DeviceSpec::WT(RenewableSpec { capacity: 50.0, availability: Some(wind) }),
            gb(),
            gb(),
        ],
        load: load(160.0),
        heat_load: heat(220.0),
        export_fraction: 1.0,
    };
    let hmg_b = HmgSpec {
        id: "B".into(),
        devices: vec![
            DeviceSpec::CHP(ChpSpec {
                pe_min: 0.0,
                pe_max: 207.0,
                ph_min: 0.0,
                ph_max: 140.0,
                zeta_e: 0.414,
                zeta_h: 0.28,
                zeta_offset: 0.0,
                n_heat: 0.45,
                fuel_price: 0.03,
            }),
            DeviceSpec::EHP(ConversionSpec { heat_max: 700.0, efficiency: 3.0 }),
            DeviceSpec::STP(RenewableSpec { capacity: 600.0, availability: Some(sun) }),
            DeviceSpec::ES(StorageSpec {
                p_max: Some(500.0),
                p_charge_max: None,
                volume_m3: None,
                soc_min: 0.1,
                soc_max: 1.0,
                soc_ini: 0.5,
                soc_end: 0.5,
                retention: 1.0,
            }),
            gb(),
            gb(),
        ],
        load: load(260.0),
        heat_load: heat(420.0),
        export_fraction: 1.0,
    };
    let hmg_c = HmgSpec {
        id: "C".into(),
        devices: vec![
            DeviceSpec::TES(StorageSpec {
                p_max: None,
                p_charge_max: None,
                volume_m3: Some(4.0),
                soc_min: 0.1,
                soc_max: 1.0,
                soc_ini: 0.5,
                soc_end: 0.5,
                retention: 0.98,
            }),
            eb(),
            eb(),
        ],
        load: load(70.0),
        heat_load: heat(140.0),
        export_fraction: 1.0,
    };
    let retailer = RetailerSpec {
        id: "R1".into(),
        sell_price: profile(w, |t, wi| scale[wi] * (0.07 + 0.1 * two_peak(t))),
        buy_price: profile(w, |t, wi| scale[wi] * (0.02 + 0.03 * two_peak(t))),
        capacity: 400.0,
    };
    CaseDefinition {
        name: "table1-synthetic".into(),
        time: TimeGrid { periods: 24, step: 1.0 },
        scenarios: ScenarioSet { weights: vec![0.6, 0.4], mcp_forecast: mcp },
        hmgs: vec![hmg_a, hmg_b, hmg_c],
        retailers: vec![retailer],
        bid_levels: 5,
        max_rounds: 50,
        tolerances: Tolerances::default(),
        options: ModelOptions::default(),
    }
}

//! Case description: time grid, scenarios, H-MGs with their devices, retailers.

pub mod reference;
mod structures;
mod validate;

pub use structures::{enumerate_structures, CoalitionStructure, StructureMode};
pub use validate::{validate_case, ValidatedCase, ValidationError};

use serde::{Deserialize, Serialize};

/// Values indexed `[scenario][period]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Series(pub Vec<Vec<f64>>);

impl Series {
    pub fn constant(w: usize, t: usize, v: f64) -> Self {
        Series(vec![vec![v; t]; w])
    }

    #[inline]
    pub fn at(&self, t: usize, w: usize) -> f64 {
        self.0[w][t]
    }

    pub fn scenarios(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub periods: usize,
    /// Hours per period.
    #[serde(default = "one")]
    pub step: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    /// Probability per scenario; uniform when omitted.
    #[serde(default)]
    pub weights: Vec<f64>,
    /// Predicted electrical clearing price (£/kWh).
    pub mcp_forecast: Series,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChpSpec {
    #[serde(default)]
    pub pe_min: f64,
    pub pe_max: f64,
    #[serde(default)]
    pub ph_min: f64,
    pub ph_max: f64,
    pub zeta_e: f64,
    pub zeta_h: f64,
    #[serde(default)]
    pub zeta_offset: f64,
    /// Fuel-to-heat conversion.
    pub n_heat: f64,
    pub fuel_price: f64,
}

/// Wind turbine or solar thermal panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewableSpec {
    pub capacity: f64,
    /// Fraction of capacity available per period and scenario; 1 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability: Option<Series>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    /// Maximum discharge (kW). For TES may be given through `volume_m3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    /// Maximum charge (kW); defaults to `p_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_charge_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_m3: Option<f64>,
    #[serde(default)]
    pub soc_min: f64,
    #[serde(default = "one")]
    pub soc_max: f64,
    pub soc_ini: f64,
    pub soc_end: f64,
    /// Per-period SOC retention of thermal storage.
    #[serde(default = "one")]
    pub retention: f64,
}

impl StorageSpec {
    /// Discharge limit. Only meaningful after validation.
    pub fn discharge_max(&self) -> f64 {
        self.p_max.unwrap_or(0.0)
    }

    pub fn charge_max(&self) -> f64 {
        self.p_charge_max.unwrap_or_else(|| self.discharge_max())
    }
}

/// Electrical boiler or heat pump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionSpec {
    pub heat_max: f64,
    /// Heat per unit electricity: boiler efficiency or heat-pump COP.
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoilerSpec {
    pub heat_max: f64,
    pub n_fuel: f64,
    pub fuel_price: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DeviceSpec {
    CHP(ChpSpec),
    WT(RenewableSpec),
    STP(RenewableSpec),
    ES(StorageSpec),
    TES(StorageSpec),
    EB(ConversionSpec),
    EHP(ConversionSpec),
    GB(BoilerSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceKind {
    CHP,
    WT,
    STP,
    ES,
    TES,
    EB,
    EHP,
    GB,
}

impl DeviceKind {
    pub fn tag(self) -> &'static str {
        match self {
            DeviceKind::CHP => "CHP",
            DeviceKind::WT => "WT",
            DeviceKind::STP => "STP",
            DeviceKind::ES => "ES",
            DeviceKind::TES => "TES",
            DeviceKind::EB => "EB",
            DeviceKind::EHP => "EHP",
            DeviceKind::GB => "GB",
        }
    }

    /// Whether the device's offer carries an electrical and a thermal bid.
    pub fn bid_components(self) -> (bool, bool) {
        match self {
            DeviceKind::CHP => (true, true),
            DeviceKind::WT | DeviceKind::ES => (true, false),
            _ => (false, true),
        }
    }
}

impl DeviceSpec {
    pub fn kind(&self) -> DeviceKind {
        match self {
            DeviceSpec::CHP(_) => DeviceKind::CHP,
            DeviceSpec::WT(_) => DeviceKind::WT,
            DeviceSpec::STP(_) => DeviceKind::STP,
            DeviceSpec::ES(_) => DeviceKind::ES,
            DeviceSpec::TES(_) => DeviceKind::TES,
            DeviceSpec::EB(_) => DeviceKind::EB,
            DeviceSpec::EHP(_) => DeviceKind::EHP,
            DeviceSpec::GB(_) => DeviceKind::GB,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmgSpec {
    pub id: String,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
    /// Predicted electrical load (kW).
    pub load: Series,
    /// Thermal load (kW).
    pub heat_load: Series,
    /// Share of the aggregate import or export any single retailer may carry.
    #[serde(default = "one")]
    pub export_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetailerSpec {
    pub id: String,
    /// Price the retailer charges H-MGs (£/kWh).
    pub sell_price: Series,
    /// Price the retailer pays H-MGs (£/kWh).
    pub buy_price: Series,
    /// Per-link exchange limit (kW).
    pub capacity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SocConvention {
    /// Positive power discharges the store.
    #[default]
    Physical,
    /// Positive power raises the state of charge.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BidClasses {
    /// One electrical and one thermal level per group.
    #[default]
    Flat,
    /// Separate levels for peak and off-peak periods.
    PeakOffpeak,
    /// One level per period.
    PerPeriod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    pub soc_convention: SocConvention,
    pub tes_loss: bool,
    /// kWh of thermal storage per m³.
    pub tes_energy_density: f64,
    /// Clearing-only cost per kWh moved between H-MGs (£/kWh).
    pub wheeling_cost: f64,
    pub bid_classes: BidClasses,
    /// Pair the demand multiplier with the thermal price in the verifier.
    pub demand_thermal_pairing: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            soc_convention: SocConvention::Physical,
            tes_loss: false,
            tes_energy_density: 60.0,
            wheeling_cost: 1e-4,
            bid_classes: BidClasses::Flat,
            demand_thermal_pairing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub stationarity: f64,
    pub complementarity: f64,
    pub nash: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { stationarity: 1e-6, complementarity: 1e-6, nash: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseDefinition {
    #[serde(default)]
    pub name: String,
    pub time: TimeGrid,
    pub scenarios: ScenarioSet,
    pub hmgs: Vec<HmgSpec>,
    #[serde(default)]
    pub retailers: Vec<RetailerSpec>,
    /// Levels per bid interval.
    #[serde(default = "five")]
    pub bid_levels: usize,
    #[serde(default = "fifty")]
    pub max_rounds: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub options: ModelOptions,
}

fn five() -> usize {
    5
}

fn fifty() -> usize {
    50
}

impl CaseDefinition {
    pub fn periods(&self) -> usize {
        self.time.periods
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.mcp_forecast.scenarios()
    }

    pub fn hmg_index(&self, id: &str) -> Option<usize> {
        self.hmgs.iter().position(|h| h.id == id)
    }
}

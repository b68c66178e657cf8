//! Declarative island energy-system model (electricity + district heat).
//!
//! A [`ModelConfig`] is read from TOML and combined with a [`ProfileSet`]
//! into a validated [`SystemModel`], which [`crate::lowering`] turns into a
//! linear program.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignPoint, Dimension};
use crate::profiles::{LoadProfile, ProfileSet, RenewableProfile};

pub const ELECTRICITY: &str = "electricity";
pub const HEAT: &str = "heat";
pub const HYDROGEN: &str = "hydrogen";
pub const GEOTHERMAL_HEAT: &str = "geothermal-heat";

/// Hours in the modelled year.
pub const HOURS_PER_YEAR: f64 = 8760.0;

pub const BASELINE_CONFIG: &str = include_str!("../configs/lyb-baseline.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid model configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("technology `{tech}` references unknown carrier `{carrier}`")]
    UnknownCarrier { tech: String, carrier: String },
    #[error("`{entry}` has a negative cost")]
    NegativeCost { entry: String },
    #[error("missing profile `{0}`")]
    MissingProfile(String),
    #[error("`{entry}`: {reason}")]
    Invalid { entry: String, reason: String },
    #[error("design point has a negative or non-finite `{0}` coordinate")]
    Domain(Dimension),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TechKind {
    Generator,
    Chp,
    FuelCellChp,
    Boiler,
    ElectricBoiler,
    HeatPump,
    VreGenerator,
    Store,
    Electrolyser,
    FuelCell,
    WasteHeatRecovery,
}

impl TechKind {
    /// Conversion technologies whose outputs may exceed their input (COP).
    pub fn is_heat_pump_like(self) -> bool {
        matches!(self, TechKind::HeatPump | TechKind::WasteHeatRecovery)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityBasis {
    /// Capacity bounds the first listed output flow.
    #[default]
    Output,
    /// Capacity bounds the input flow.
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub carrier: String,
    /// Efficiency, or COP for heat pumps.
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraInput {
    pub carrier: String,
    /// Units drawn per unit of primary input.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WasteHeatSource {
    pub technology: String,
    /// Share of the source's input energy recoverable as low-temperature heat.
    pub fraction: f64,
}

fn default_true() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

/// One technology as written in the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologySpec {
    pub id: String,
    pub kind: TechKind,
    #[serde(default)]
    pub input: Option<String>,
    #[serde(default)]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub extra_inputs: Vec<ExtraInput>,
    /// MNOK per MW (per MWh for stores), annualised.
    #[serde(default)]
    pub capital_cost: f64,
    /// NOK per MWh of input.
    #[serde(default)]
    pub marginal_cost: f64,
    #[serde(default)]
    pub existing: f64,
    /// Total capacity limit; unbounded when absent.
    #[serde(default)]
    pub limit: Option<f64>,
    #[serde(default = "default_true")]
    pub extendable: bool,
    #[serde(default)]
    pub capacity_basis: CapacityBasis,
    /// Profile key for VRE generators (`wind` or `solar`).
    #[serde(default)]
    pub profile: Option<String>,
    /// Store carrier.
    #[serde(default)]
    pub carrier: Option<String>,
    /// Carrier a store charges from, when different from `carrier`.
    #[serde(default)]
    pub charge_from: Option<String>,
    #[serde(default = "one")]
    pub charge_efficiency: f64,
    #[serde(default = "one")]
    pub discharge_efficiency: f64,
    #[serde(default)]
    pub waste_heat_sources: Vec<WasteHeatSource>,
    #[serde(default)]
    pub dimension: Option<Dimension>,
}

impl TechnologySpec {
    pub fn is_store(&self) -> bool {
        self.kind == TechKind::Store
    }

    pub fn store_carrier(&self) -> Option<&str> {
        self.carrier.as_deref()
    }

    pub fn charge_carrier(&self) -> Option<&str> {
        self.charge_from.as_deref().or(self.carrier.as_deref())
    }

    /// Output produced per unit of the capacity-bounded flow.
    pub fn basis_factor(&self) -> f64 {
        match (self.kind, self.capacity_basis) {
            (TechKind::Store, _) | (TechKind::VreGenerator, _) | (_, CapacityBasis::Input) => 1.0,
            (_, CapacityBasis::Output) => self.outputs.first().map_or(1.0, |o| o.efficiency),
        }
    }

    pub fn output_efficiency(&self, carrier: &str) -> f64 {
        self.outputs
            .iter()
            .filter(|o| o.carrier == carrier)
            .map(|o| o.efficiency)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelSpec {
    pub id: String,
    /// NOK per MWh thermal.
    pub price: f64,
    /// Counts towards the green-fuel-imports design dimension.
    #[serde(default)]
    pub green: bool,
    /// Emits CO2 when burned.
    #[serde(default)]
    pub fossil: bool,
    /// Arrives from off-island.
    #[serde(default = "default_true")]
    pub imported: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriceWeighting {
    #[default]
    Demand,
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    /// tCO2 per MWh of fossil fuel (thermal).
    pub emission_factor: f64,
    /// Heat storage capacity that counts as full backup, MWh.
    pub heat_storage_anchor_mwh: f64,
    /// Installed capacity at which a technology counts as present, MW or MWh.
    pub diversity_threshold: f64,
    pub price_weighting: PriceWeighting,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            emission_factor: 0.267,
            heat_storage_anchor_mwh: 4000.0,
            diversity_threshold: 1.0,
            price_weighting: PriceWeighting::Demand,
        }
    }
}

/// Footprints in m² per MW (per MWh for stores) and m² per MWh of annual fuel use.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandUseTable {
    pub technologies: BTreeMap<String, f64>,
    pub fuels: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default = "default_resolution")]
    pub resolution_hours: f64,
    pub fuels: Vec<FuelSpec>,
    pub technologies: Vec<TechnologySpec>,
    #[serde(default)]
    pub metrics: MetricParams,
    #[serde(default)]
    pub land_use: LandUseTable,
}

fn default_resolution() -> f64 {
    3.0
}

impl ModelConfig {
    pub fn baseline() -> Self {
        Self::from_toml(BASELINE_CONFIG).expect("bundled baseline config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Snapshot count implied by the resolution.
    pub fn snapshots(&self) -> usize {
        (HOURS_PER_YEAR / self.resolution_hours).round() as usize
    }

    pub fn technology(&self, id: &str) -> Option<&TechnologySpec> {
        self.technologies.iter().find(|t| t.id == id)
    }

    pub fn technology_mut(&mut self, id: &str) -> Option<&mut TechnologySpec> {
        self.technologies.iter_mut().find(|t| t.id == id)
    }

    pub fn fuel_mut(&mut self, id: &str) -> Option<&mut FuelSpec> {
        self.fuels.iter_mut().find(|f| f.id == id)
    }

    /// Set the resolution so that the year splits into `snapshots` equal steps.
    pub fn with_snapshots(mut self, snapshots: usize) -> Self {
        self.resolution_hours = HOURS_PER_YEAR / snapshots as f64;
        self
    }

    /// Drop every extendable technology that has no existing capacity.
    pub fn without_candidates(mut self) -> Self {
        self.technologies.retain(|t| !t.extendable || t.existing > 0.0);
        for t in &mut self.technologies {
            t.extendable = false;
        }
        self
    }
}

/// A validated model ready for lowering. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub name: String,
    pub carriers: Vec<String>,
    pub fuels: Vec<FuelSpec>,
    pub technologies: Vec<TechnologySpec>,
    pub electricity_load: LoadProfile,
    pub heat_load: LoadProfile,
    pub vre_profiles: Vec<RenewableProfile>,
    pub snapshots: usize,
    /// Hours represented by each snapshot.
    pub weight: f64,
    pub metrics: MetricParams,
    pub land_use: LandUseTable,
    /// When set, lowering pins the five design aggregates to this point.
    pub fixed_design: Option<DesignPoint>,
}

impl SystemModel {
    pub fn carrier_index(&self, carrier: &str) -> Option<usize> {
        self.carriers.iter().position(|c| c == carrier)
    }

    pub fn technology_index(&self, id: &str) -> Option<usize> {
        self.technologies.iter().position(|t| t.id == id)
    }

    pub fn fuel_index(&self, id: &str) -> Option<usize> {
        self.fuels.iter().position(|f| f.id == id)
    }

    pub fn vre_profile(&self, key: &str) -> Option<&RenewableProfile> {
        self.vre_profiles.iter().find(|p| p.technology == key)
    }

    pub fn load_for(&self, carrier: &str) -> Option<&LoadProfile> {
        match carrier {
            ELECTRICITY => Some(&self.electricity_load),
            HEAT => Some(&self.heat_load),
            _ => None,
        }
    }
}

fn invalid(entry: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        entry: entry.to_string(),
        reason: reason.into(),
    }
}

/// Validate `config` against `profiles` and assemble the model.
pub fn build_model(config: &ModelConfig, profiles: &ProfileSet) -> Result<SystemModel, ConfigError> {
    if !(config.resolution_hours > 0.0) {
        return Err(invalid("resolution_hours", "must be positive"));
    }
    let snapshots = profiles.len();
    if snapshots == 0 {
        return Err(ConfigError::MissingProfile("electricity load".into()));
    }
    let weight = HOURS_PER_YEAR / snapshots as f64;
    if (weight - config.resolution_hours).abs() > 1e-9 {
        return Err(invalid(
            "profiles",
            format!(
                "{snapshots} snapshots do not match a {} h resolution",
                config.resolution_hours
            ),
        ));
    }
    profiles.validate().map_err(|reason| invalid("profiles", reason))?;

    let mut carriers: Vec<String> = [ELECTRICITY, HEAT, HYDROGEN, GEOTHERMAL_HEAT]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut seen = HashSet::new();
    for f in &config.fuels {
        if !seen.insert(f.id.clone()) || carriers.contains(&f.id) {
            return Err(invalid(&f.id, "duplicate carrier"));
        }
        if !(f.price >= 0.0) {
            return Err(ConfigError::NegativeCost { entry: f.id.clone() });
        }
        carriers.push(f.id.clone());
    }

    let known = |c: &str| carriers.iter().any(|k| k == c);
    let mut ids = HashSet::new();
    for t in &config.technologies {
        if !ids.insert(t.id.as_str()) {
            return Err(invalid(&t.id, "duplicate technology id"));
        }
        if !(t.capital_cost >= 0.0) || !(t.marginal_cost >= 0.0) {
            return Err(ConfigError::NegativeCost { entry: t.id.clone() });
        }
        if !(t.existing >= 0.0) {
            return Err(invalid(&t.id, "existing capacity must be nonnegative"));
        }
        if let Some(limit) = t.limit {
            if !(limit >= t.existing) {
                return Err(invalid(&t.id, "capacity limit below existing capacity"));
            }
        }
        let unknown = |c: &str| ConfigError::UnknownCarrier {
            tech: t.id.clone(),
            carrier: c.to_string(),
        };
        match t.kind {
            TechKind::Store => {
                let carrier = t
                    .carrier
                    .as_deref()
                    .ok_or_else(|| invalid(&t.id, "store needs a carrier"))?;
                if !known(carrier) {
                    return Err(unknown(carrier));
                }
                if let Some(from) = t.charge_from.as_deref() {
                    if !known(from) {
                        return Err(unknown(from));
                    }
                }
                let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
                if !eff_ok(t.charge_efficiency) || !eff_ok(t.discharge_efficiency) {
                    return Err(invalid(&t.id, "store efficiencies must lie in (0, 1]"));
                }
            }
            TechKind::VreGenerator => {
                let key = t
                    .profile
                    .as_deref()
                    .ok_or_else(|| invalid(&t.id, "VRE generator needs a profile"))?;
                if profiles.renewable(key).is_none() {
                    return Err(ConfigError::MissingProfile(key.to_string()));
                }
                if t.outputs.len() != 1 {
                    return Err(invalid(&t.id, "VRE generator has exactly one output"));
                }
            }
            kind => {
                let input = t
                    .input
                    .as_deref()
                    .ok_or_else(|| invalid(&t.id, "conversion technology needs an input"))?;
                if !known(input) {
                    return Err(unknown(input));
                }
                if t.outputs.is_empty() {
                    return Err(invalid(&t.id, "conversion technology needs an output"));
                }
                for e in &t.extra_inputs {
                    if !known(&e.carrier) {
                        return Err(unknown(&e.carrier));
                    }
                    if !(e.ratio > 0.0) {
                        return Err(invalid(&t.id, "extra input ratio must be positive"));
                    }
                }
                for o in &t.outputs {
                    let ok = if kind.is_heat_pump_like() {
                        o.efficiency >= 1.0
                    } else {
                        o.efficiency > 0.0 && o.efficiency <= 1.0
                    };
                    if !ok {
                        return Err(invalid(
                            &t.id,
                            format!("efficiency {} out of range for {:?}", o.efficiency, kind),
                        ));
                    }
                }
                if kind == TechKind::WasteHeatRecovery {
                    for s in &t.waste_heat_sources {
                        let src = config
                            .technology(&s.technology)
                            .ok_or_else(|| invalid(&t.id, format!("unknown waste-heat source `{}`", s.technology)))?;
                        if src.is_store() || src.kind == TechKind::VreGenerator {
                            return Err(invalid(&t.id, "waste-heat source must be a converter"));
                        }
                        if !(s.fraction >= 0.0 && s.fraction <= 1.0) {
                            return Err(invalid(&t.id, "waste-heat fraction must lie in [0, 1]"));
                        }
                    }
                }
            }
        }
        for o in &t.outputs {
            if !known(&o.carrier) {
                return Err(unknown(&o.carrier));
            }
        }
    }
    for (key, v) in config.land_use.technologies.iter().chain(&config.land_use.fuels) {
        if !(*v >= 0.0) {
            return Err(invalid(key, "land-use footprint must be nonnegative"));
        }
    }

    let mut vre_profiles = Vec::new();
    for t in config.technologies.iter().filter(|t| t.kind == TechKind::VreGenerator) {
        let key = t.profile.as_deref().unwrap_or_default();
        if vre_profiles.iter().all(|p: &RenewableProfile| p.technology != key) {
            vre_profiles.push(profiles.renewable(key).expect("checked above").clone());
        }
    }

    Ok(SystemModel {
        name: config.name.clone(),
        carriers,
        fuels: config.fuels.clone(),
        technologies: config.technologies.clone(),
        electricity_load: profiles.electricity.clone(),
        heat_load: profiles.heat.clone(),
        vre_profiles,
        snapshots,
        weight,
        metrics: config.metrics.clone(),
        land_use: config.land_use.clone(),
        fixed_design: None,
    })
}

/// Pin the five design aggregates to `point`; every other variable stays free.
pub fn fix_design(model: &SystemModel, point: DesignPoint) -> Result<SystemModel, ConfigError> {
    if let Some(d) = point.invalid_dimension() {
        return Err(ConfigError::Domain(d));
    }
    let mut fixed = model.clone();
    fixed.fixed_design = Some(point);
    Ok(fixed)
}

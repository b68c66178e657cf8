#![allow(dead_code)]

use nearopt_core::profiles::{synthetic, LoadTargets, ProfileSet};
use nearopt_core::{build_model, ModelConfig, SystemModel};

/// One existing 11 MW diesel generator and nothing else.
pub const DIESEL_ONLY: &str = r#"
name = "toy-diesel"
resolution_hours = 8760.0

[[fuels]]
id = "diesel"
price = 1508.0
fossil = true

[[technologies]]
id = "diesel-generator"
kind = "generator"
input = "diesel"
outputs = [{ carrier = "electricity", efficiency = 0.45 }]
existing = 11.0
extendable = false

[land_use.technologies]
diesel-generator = 25.0
"#;

/// Heat served only from a pellet boiler.
pub const PELLETS_ONLY: &str = r#"
name = "toy-pellets"
resolution_hours = 8760.0

[[fuels]]
id = "pellets"
price = 420.0
green = true

[[technologies]]
id = "boiler-pellets"
kind = "boiler"
input = "pellets"
outputs = [{ carrier = "heat", efficiency = 0.90 }]
capital_cost = 0.083

[land_use.technologies]
boiler-pellets = 0.0

[land_use.fuels]
pellets = 12.65
"#;

/// Free solar feeds an electric boiler; heat can only reach the second snapshot through the store.
pub const SOLAR_TO_STORE: &str = r#"
name = "toy-store"
resolution_hours = 4380.0
fuels = []

[[technologies]]
id = "solar"
kind = "vre-generator"
profile = "solar"
outputs = [{ carrier = "electricity", efficiency = 1.0 }]
capital_cost = 0.565
dimension = "solar"

[[technologies]]
id = "electric-boiler"
kind = "electric-boiler"
input = "electricity"
outputs = [{ carrier = "heat", efficiency = 1.0 }]
existing = 1000.0
extendable = false

[[technologies]]
id = "overground-heat-storage"
kind = "store"
carrier = "heat"
existing = 1.0e7
extendable = false
charge_efficiency = 0.975
discharge_efficiency = 0.975
dimension = "heat-storage"
"#;

pub fn toy(text: &str, profiles: &ProfileSet) -> SystemModel {
    let cfg = ModelConfig::from_toml(text).unwrap().with_snapshots(profiles.len());
    build_model(&cfg, profiles).unwrap()
}

/// Baseline configuration over `t` synthetic snapshots.
pub fn baseline(t: usize) -> SystemModel {
    let cfg = ModelConfig::baseline().with_snapshots(t);
    build_model(&cfg, &synthetic(42, t, LoadTargets::default())).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

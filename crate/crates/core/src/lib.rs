//! Island energy-system model, near-optimal space sampling, metrics and
//! geometric queries over the sampled design space.

pub mod analysis;
pub mod design;
pub mod hull;
pub mod lowering;
pub mod metrics;
pub mod model;
pub mod profiles;
pub mod sampler;
pub mod solver;
pub mod store;
pub mod submission;

pub use design::{DesignPoint, Dimension, Normalization, NUM_DIMS};
pub use model::{build_model, fix_design, ConfigError, ModelConfig, SystemModel};
pub use profiles::ProfileSet;

//! Parameters, the claim measure, and strategy representations.

pub mod claims;
pub mod config;
pub mod params;
pub mod strategy;

pub use claims::{ClaimMeasure, EmpiricalSeverity, Severity};
pub use config::{load_config, parse_config, write_config, Config};
pub use params::{ModelParams, Warning};
pub use strategy::{Retention, Schedule, Spike, Strategy};

/// `∫ z nu(dz)`.
pub fn claim_mean(measure: &ClaimMeasure) -> f64 {
    measure.mean()
}

/// `ℓ(z, t)` for the given strategy.
pub fn retained_claim(strategy: &Strategy, z: f64, t: f64) -> crate::Result<f64> {
    strategy.retained_claim(z, t)
}

//! JSON configuration files.
//!
//! ```json
//! {
//!   "market":     { "r": 0.05, "mu": 0.10, "sigma2": 0.30, "rho": 0.0 },
//!   "insurance":  { "sigma1": 0.0, "theta": 0.50, "eta": 0.60 },
//!   "preference": { "gamma": 0.50, "T": 3.0 },
//!   "claims":     { "lambda": 1.0, "severity": { "type": "exponential", "rate": 0.5 } },
//!   "state":      { "x0": 0.0, "t0": 0.0 }
//! }
//! ```
//!
//! An optional `"quadrature": { "abs_tol", "max_depth" }` block overrides
//! the time-quadrature settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::claims::{ClaimMeasure, Severity};
use super::params::ModelParams;
use crate::error::{Error, Result, Violation};
use crate::quadrature::QuadSettings;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    pub claims: ClaimMeasure,
    pub x0: f64,
    pub t0: f64,
    pub quad: QuadSettings,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Market {
    r: f64,
    mu: f64,
    sigma2: f64,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Insurance {
    sigma1: f64,
    theta: f64,
    eta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Preference {
    gamma: f64,
    #[serde(rename = "T")]
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Claims {
    lambda: f64,
    severity: Severity,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct State {
    x0: f64,
    t0: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    market: Market,
    insurance: Insurance,
    preference: Preference,
    claims: Claims,
    state: State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quadrature: Option<QuadSettings>,
}

impl Config {
    pub fn new(params: ModelParams, claims: ClaimMeasure, x0: f64, t0: f64) -> Self {
        Self {
            params,
            claims,
            x0,
            t0,
            quad: QuadSettings::default(),
        }
    }

    /// Strategy-sensitivity example with the claim measure of the
    /// Cramér–Lundberg example (λ = 1, exponential rate 0.5).
    pub fn example1() -> Self {
        Self::new(
            ModelParams::example1(),
            ClaimMeasure::new(1.0, Severity::exponential(0.5)).expect("valid"),
            0.0,
            0.0,
        )
    }

    pub fn example2() -> Self {
        Self::new(
            ModelParams::example2(),
            ClaimMeasure::new(1.0, Severity::exponential(0.5)).expect("valid"),
            0.0,
            0.0,
        )
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = self.params.violations();
        v.extend(self.claims.violations());
        if !self.x0.is_finite() {
            v.push(Violation::new("state.x0", "must be finite"));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0 && self.t0 < self.params.horizon) {
            v.push(Violation::new("state.t0", "must lie in [0, T)"));
        }
        if !(self.quad.abs_tol.is_finite() && self.quad.abs_tol > 0.0) {
            v.push(Violation::new("quadrature.abs_tol", "must be > 0"));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    fn to_file(&self) -> ConfigFile {
        let p = &self.params;
        ConfigFile {
            market: Market {
                r: p.r,
                mu: p.mu,
                sigma2: p.sigma2,
                rho: p.rho,
            },
            insurance: Insurance {
                sigma1: p.sigma1,
                theta: p.theta,
                eta: p.eta,
            },
            preference: Preference {
                gamma: p.gamma,
                horizon: p.horizon,
            },
            claims: Claims {
                lambda: self.claims.intensity,
                severity: self.claims.severity.clone(),
            },
            state: State {
                x0: self.x0,
                t0: self.t0,
            },
            quadrature: (self.quad != QuadSettings::default()).then_some(self.quad),
        }
    }

    fn from_file(f: ConfigFile) -> Self {
        Self {
            params: ModelParams {
                r: f.market.r,
                mu: f.market.mu,
                sigma1: f.insurance.sigma1,
                sigma2: f.market.sigma2,
                rho: f.market.rho,
                theta: f.insurance.theta,
                eta: f.insurance.eta,
                gamma: f.preference.gamma,
                horizon: f.preference.horizon,
            },
            claims: ClaimMeasure {
                intensity: f.claims.lambda,
                severity: f.claims.severity,
            },
            x0: f.state.x0,
            t0: f.state.t0,
            quad: f.quadrature.unwrap_or_default(),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("config serializes")
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let file: ConfigFile = serde_json::from_str(text)?;
    let cfg = Config::from_file(file);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn write_config(cfg: &Config) -> String {
    serde_json::to_string_pretty(&cfg.to_file()).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXAMPLE2: &str = r#"{
        "market": {"r": 0.05, "mu": 0.10, "sigma2": 0.30, "rho": 0.0},
        "insurance": {"sigma1": 0.0, "theta": 0.50, "eta": 0.60},
        "preference": {"gamma": 0.50, "T": 3},
        "claims": {"lambda": 1, "severity": {"type": "exponential", "rate": 0.5}},
        "state": {"x0": 0, "t0": 0}
    }"#;

    #[test]
    fn parses_example2() {
        let cfg = parse_config(EXAMPLE2).unwrap();
        assert_eq!(cfg, Config::example2());
    }

    #[test]
    fn example1_round_trips() {
        let cfg = Config::example1();
        assert_eq!(parse_config(&write_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn rho_on_boundary_is_rejected_by_name() {
        let text = EXAMPLE2.replace(r#""rho": 0.0"#, r#""rho": 1.0"#);
        match parse_config(&text) {
            Err(Error::Validation(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].field, "rho");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn lists_every_violation() {
        let text = EXAMPLE2
            .replace(r#""gamma": 0.50"#, r#""gamma": -1"#)
            .replace(r#""lambda": 1"#, r#""lambda": -1"#)
            .replace(r#""t0": 0"#, r#""t0": 3"#);
        match parse_config(&text) {
            Err(Error::Validation(v)) => {
                let fields: Vec<_> = v.iter().map(|x| x.field.as_str()).collect();
                assert_eq!(fields, vec!["gamma", "claims.lambda", "state.t0"]);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_json_are_parse_errors() {
        let text = EXAMPLE2.replace(r#""rho": 0.0"#, r#""rho": 0.0, "kappa": 1"#);
        assert!(matches!(parse_config(&text), Err(Error::Parse(_))));
        assert!(matches!(parse_config("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, EXAMPLE2).unwrap();
        assert_eq!(load_config(&path).unwrap(), Config::example2());
        assert!(matches!(load_config(dir.path().join("missing.json")), Err(Error::Io(_))));
    }

    proptest! {
        #[test]
        fn write_then_load_is_exact(
            r in 0.001f64..0.2, excess in 1e-4f64..0.5, sigma1 in 0.0f64..1.0,
            sigma2 in 0.01f64..1.0, rho in -0.99f64..0.99, theta in 0.01f64..2.0,
            eta in 0.01f64..2.0, gamma in 0.01f64..10.0, horizon in 0.1f64..30.0,
            lambda in 0.0f64..5.0, rate in 0.01f64..5.0, x0 in -100.0f64..100.0,
            frac in 0.0f64..0.999,
        ) {
            let cfg = Config::new(
                ModelParams { r, mu: r + excess, sigma1, sigma2, rho, theta, eta, gamma, horizon },
                ClaimMeasure::new(lambda, Severity::exponential(rate)).unwrap(),
                x0,
                frac * horizon,
            );
            prop_assert_eq!(parse_config(&write_config(&cfg)).unwrap(), cfg);
        }
    }
}

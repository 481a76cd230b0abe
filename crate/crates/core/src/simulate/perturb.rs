//! Monte Carlo check of the equilibrium condition: replacing the
//! equilibrium rule by `(ℓ̄, π̄)` on `[t, t+ε)` must not raise the
//! objective at first order in `ε`.
//!
//! The library is a finite sample of admissible deviations, not an
//! exhaustive check over all of them.

use serde::Serialize;

use super::engine::{simulate_coupled, SimConfig};
use super::estimate::{estimate_objective, paired_objective_difference, MCEstimate};
use crate::equilibrium::EquilibriumStrategy;
use crate::error::{Error, Result};
use crate::model::{ClaimMeasure, ModelParams, Retention, Schedule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    pub name: String,
    pub retention: Retention,
    pub investment: Schedule,
    /// Whether the deviation differs from the equilibrium rule at `t`.
    pub strictly_suboptimal: bool,
}

impl Perturbation {
    pub fn new(name: impl Into<String>, retention: Retention, investment: Schedule) -> Self {
        Self {
            name: name.into(),
            retention,
            investment,
            strictly_suboptimal: true,
        }
    }

    /// The equilibrium rule itself.
    pub fn identity(p: &ModelParams) -> Self {
        let eq = EquilibriumStrategy::new(*p);
        Self {
            name: "equilibrium".into(),
            retention: eq.retention(),
            investment: eq.investment_schedule(),
            strictly_suboptimal: false,
        }
    }
}

/// Full and zero retention, quota shares 1/4, 1/2, 3/4 and deductibles
/// `m*(t)/2`, `2m*(t)` with `π̄ = π*(t)`; investments `0`, `π*(t) ± 1`
/// with the equilibrium retention.
pub fn perturbation_library(t: f64, p: &ModelParams) -> Result<Vec<Perturbation>> {
    let eq = EquilibriumStrategy::new(*p);
    let m = eq.deductible(t)?;
    let pi = eq.investment(t)?;
    let at_pi = Schedule::constant(pi);
    let mut out = vec![
        Perturbation::new("full_retention", Retention::Full, at_pi),
        Perturbation::new("zero_retention", Retention::zero(), at_pi),
    ];
    for q in [0.25, 0.5, 0.75] {
        out.push(Perturbation::new(
            format!("proportional_{q}"),
            Retention::proportional(Schedule::constant(q)),
            at_pi,
        ));
    }
    out.push(Perturbation::new(
        "deductible_half",
        Retention::excess_loss(Schedule::constant(0.5 * m)),
        at_pi,
    ));
    out.push(Perturbation::new(
        "deductible_double",
        Retention::excess_loss(Schedule::constant(2.0 * m)),
        at_pi,
    ));
    for (name, v) in [
        ("investment_zero", 0.0),
        ("investment_plus_one", pi + 1.0),
        ("investment_minus_one", pi - 1.0),
    ] {
        out.push(Perturbation::new(name, eq.retention(), Schedule::constant(v)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioEstimate {
    pub eps: f64,
    /// `(J^{u*} - J^{u^ε}) / ε`
    pub ratio: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationResult {
    pub name: String,
    pub strictly_suboptimal: bool,
    pub estimates: Vec<RatioEstimate>,
    /// Every ratio is at least `-3 SE`.
    pub pass: bool,
    /// The smallest-ε ratio exceeds `3 SE`.
    pub separated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub x: f64,
    pub t: f64,
    pub eps: Vec<f64>,
    pub n_paths: usize,
    pub steps_per_unit_time: usize,
    pub seed: u64,
    pub equilibrium: MCEstimate,
    pub results: Vec<PerturbationResult>,
    pub pass: bool,
}

fn check_eps(t: f64, eps: &[f64], horizon: f64) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InfeasibleEpsilon("empty list".into()));
    }
    if !(t >= 0.0 && t < horizon) {
        return Err(Error::InfeasibleEpsilon(format!("t = {t} outside [0, {horizon})")));
    }
    for w in eps.windows(2) {
        if !(w[0] > w[1]) {
            return Err(Error::InfeasibleEpsilon(format!(
                "not strictly decreasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let (first, last) = (eps[0], eps[eps.len() - 1]);
    if !(last > 0.0 && first.is_finite()) {
        return Err(Error::InfeasibleEpsilon("every ε must be positive and finite".into()));
    }
    if t + first > horizon {
        return Err(Error::InfeasibleEpsilon(format!(
            "t + ε = {} exceeds T = {horizon}",
            t + first
        )));
    }
    Ok(())
}

/// Runs the equilibrium strategy and every spiked variant from `(x, t)` in
/// one coupled simulation, so all strategies share noise.
pub fn perturbation_test(
    x: f64,
    t: f64,
    eps: &[f64],
    perturbations: &[Perturbation],
    config: &SimConfig,
    p: &ModelParams,
    cm: &ClaimMeasure,
) -> Result<PerturbationReport> {
    check_eps(t, eps, p.horizon)?;
    let base = EquilibriumStrategy::new(*p).to_strategy();
    let mut strategies = vec![base];
    for pert in perturbations {
        for &e in eps {
            strategies.push(base.with_spike(t, t + e, pert.retention, pert.investment));
        }
    }
    let run = SimConfig { x0: x, t0: t, ..*config };
    let samples = simulate_coupled(&run, &strategies, p, cm)?;
    let mut equilibrium = estimate_objective(&samples[0], p.gamma)?;
    equilibrium.seed = Some(config.seed);

    let mut results = Vec::with_capacity(perturbations.len());
    for (i, pert) in perturbations.iter().enumerate() {
        let mut estimates = Vec::with_capacity(eps.len());
        for (j, &e) in eps.iter().enumerate() {
            let spiked = &samples[1 + i * eps.len() + j];
            let (diff, se) = paired_objective_difference(&samples[0], spiked, p.gamma)?;
            estimates.push(RatioEstimate {
                eps: e,
                ratio: diff / e,
                se: se / e,
            });
        }
        let pass = estimates.iter().all(|r| r.ratio >= -3.0 * r.se);
        let smallest = estimates.last().expect("nonempty");
        results.push(PerturbationResult {
            name: pert.name.clone(),
            strictly_suboptimal: pert.strictly_suboptimal,
            separated: smallest.ratio > 3.0 * smallest.se,
            estimates,
            pass,
        });
    }
    let pass = results.iter().all(|r| r.pass);
    Ok(PerturbationReport {
        x,
        t,
        eps: eps.to_vec(),
        n_paths: config.n_paths,
        steps_per_unit_time: config.steps_per_unit_time,
        seed: config.seed,
        equilibrium,
        results,
        pass,
    })
}

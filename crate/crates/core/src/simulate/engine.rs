//! Path simulation of the controlled surplus.
//!
//! The engine integrates the discounted surplus `Y_t = e^{r(T-t)} X_t`,
//! whose dynamics carry no state-dependent term:
//!
//! ```text
//! dY = e^{r(T-t)} { [(μ-r)π + ∫((θ-η)z + (1+η)ℓ) ν(dz)] dt + σ(π) dB - ∫ℓ N(dz, dt) }
//! ```
//!
//! The `rX dt` part of the surplus drift is therefore integrated exactly,
//! and the remaining coefficients are frozen at step midpoints. Claims
//! arrive at their exact Poisson times and are subtracted at that instant;
//! the compensator `∫ℓν dt` sits in the drift. Because the coefficients are
//! deterministic, splitting a step at a claim time would leave the
//! Brownian contribution unchanged in law, so claims are simply applied
//! inside the step that contains them.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::{substream, Stream};
use crate::error::{Error, Result, Violation};
use crate::model::{ClaimMeasure, ModelParams, Strategy};

/// `|X|` beyond this aborts the run.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub steps_per_unit_time: usize,
    pub seed: u64,
    pub x0: f64,
    pub t0: f64,
    /// Worker count; `None` uses the global pool. Results do not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            steps_per_unit_time: 200,
            seed: 0,
            x0: 0.0,
            t0: 0.0,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn violations(&self, horizon: f64) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.n_paths < 1 {
            v.push(Violation::new("n_paths", "must be >= 1"));
        }
        if self.steps_per_unit_time < 1 {
            v.push(Violation::new("steps_per_unit_time", "must be >= 1"));
        }
        if !self.x0.is_finite() {
            v.push(Violation::new("x0", "must be finite"));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0 && self.t0 < horizon) {
            v.push(Violation::new("t0", "must lie in [0, T)"));
        }
        if self.threads == Some(0) {
            v.push(Violation::new("threads", "must be >= 1"));
        }
        v
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        let v = self.violations(horizon);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// Step grid and per-strategy coefficients shared by every path.
struct Plan {
    ends: Vec<f64>,
    /// `[strategy][step]`
    drift: Vec<Vec<f64>>,
    vol: Vec<Vec<f64>>,
    /// Step indices after which the state is recorded; `usize::MAX` = initial.
    record_after: Vec<usize>,
}

fn diffusion_sd(pi: f64, p: &ModelParams) -> f64 {
    (p.sigma1 * p.sigma1 + 2.0 * p.rho * p.sigma1 * p.sigma2 * pi + p.sigma2 * p.sigma2 * pi * pi)
        .max(0.0)
        .sqrt()
}

fn build_plan(
    config: &SimConfig,
    strategies: &[Strategy],
    observe: &[f64],
    p: &ModelParams,
    cm: &ClaimMeasure,
) -> Plan {
    let (t0, horizon) = (config.t0, p.horizon);
    let mut nodes = vec![t0, horizon];
    for s in strategies {
        nodes.extend(s.breakpoints(t0));
    }
    nodes.extend(observe.iter().copied().filter(|&t| t > t0 && t < horizon));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let mut ends = Vec::new();
    let mut mids = Vec::new();
    let mut lens = Vec::new();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = (((b - a) * config.steps_per_unit_time as f64).ceil() as usize).max(1);
        let h = (b - a) / n as f64;
        for i in 0..n {
            let start = a + i as f64 * h;
            let end = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
            ends.push(end);
            mids.push(0.5 * (start + end));
            lens.push(end - start);
        }
    }

    let mean_claim = cm.mean();
    let mut drift = Vec::with_capacity(strategies.len());
    let mut vol = Vec::with_capacity(strategies.len());
    for s in strategies {
        let mut d = Vec::with_capacity(ends.len());
        let mut v = Vec::with_capacity(ends.len());
        for (&tm, &h) in mids.iter().zip(&lens) {
            let (ret, inv) = s.active(tm);
            let pi = inv.at(tm);
            let a = p.growth(tm);
            let c = (p.mu - p.r) * pi
                + (p.theta - p.eta) * mean_claim
                + (1.0 + p.eta) * ret.expected_retained(cm, tm);
            d.push(a * c * h);
            v.push(a * diffusion_sd(pi, p) * h.sqrt());
        }
        drift.push(d);
        vol.push(v);
    }

    let record_after = observe
        .iter()
        .map(|&t| {
            if t <= t0 {
                usize::MAX
            } else {
                ends.iter().position(|&e| e >= t).unwrap_or(ends.len() - 1)
            }
        })
        .collect();

    Plan {
        ends,
        drift,
        vol,
        record_after,
    }
}

/// Claim arrivals on `[t0, T)` as `(time, size)`.
fn claim_stream<R: Rng>(rng: &mut R, t0: f64, horizon: f64, cm: &ClaimMeasure) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if cm.intensity <= 0.0 {
        return out;
    }
    let gap = Exp::new(cm.intensity).expect("positive intensity");
    let mut t = t0 + gap.sample(rng);
    while t < horizon {
        out.push((t, cm.sample_severity(rng)));
        t += gap.sample(rng);
    }
    out
}

/// One path for every strategy; returns `[obs][strategy]` flattened.
fn run_path(
    path: usize,
    config: &SimConfig,
    plan: &Plan,
    strategies: &[Strategy],
    p: &ModelParams,
    cm: &ClaimMeasure,
) -> Result<Vec<f64>> {
    let k = strategies.len();
    let mut brownian = substream(config.seed, path as u64, Stream::Brownian);
    let mut claims_rng = substream(config.seed, path as u64, Stream::Claims);
    let claims = claim_stream(&mut claims_rng, config.t0, p.horizon, cm);

    let y0 = p.growth(config.t0) * config.x0;
    let mut y = vec![y0; k];
    let mut out = vec![0.0; k * plan.record_after.len()];
    for (o, &r) in plan.record_after.iter().enumerate() {
        if r == usize::MAX {
            for (i, &x) in y.iter().enumerate() {
                out[o * k + i] = x / p.growth(config.t0);
            }
        }
    }

    let mut next_claim = 0;
    for (j, &end) in plan.ends.iter().enumerate() {
        let z: f64 = StandardNormal.sample(&mut brownian);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += plan.drift[i][j] + plan.vol[i][j] * z;
        }
        let last = j + 1 == plan.ends.len();
        while next_claim < claims.len() && (claims[next_claim].0 < end || last) {
            let (tau, size) = claims[next_claim];
            let a = p.growth(tau);
            for (i, s) in strategies.iter().enumerate() {
                y[i] -= a * s.active(tau).0.retained(size, tau);
            }
            next_claim += 1;
        }
        let a_end = p.growth(end);
        for &v in &y {
            if !(v.abs() / a_end <= BLOWUP_LIMIT) {
                return Err(Error::Blowup {
                    value: v / a_end,
                    t: end,
                    path,
                });
            }
        }
        for (o, &r) in plan.record_after.iter().enumerate() {
            if r == j {
                for (i, &x) in y.iter().enumerate() {
                    out[o * k + i] = x / a_end;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn map_paths<F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<_>>>();
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_paths<F>(n: usize, _threads: Option<usize>, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync + Send,
{
    (0..n).map(f).collect()
}

fn check_inputs(config: &SimConfig, strategies: &[Strategy], p: &ModelParams, cm: &ClaimMeasure) -> Result<()> {
    p.validate()?;
    let v = cm.violations();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    config.validate(p.horizon)?;
    for s in strategies {
        if s.horizon != p.horizon {
            return Err(Error::InvalidStrategy(format!(
                "strategy horizon {} differs from T = {}",
                s.horizon, p.horizon
            )));
        }
        s.validate(config.t0)?;
    }
    Ok(())
}

/// Surplus at each observation time, `[time][strategy][path]`. Every
/// strategy sees the same Brownian path and the same claims.
pub fn simulate_coupled_observed(
    config: &SimConfig,
    strategies: &[Strategy],
    p: &ModelParams,
    cm: &ClaimMeasure,
    observe: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_inputs(config, strategies, p, cm)?;
    for &t in observe {
        if !(t >= config.t0 && t <= p.horizon) {
            return Err(Error::TimeOutOfRange { t, horizon: p.horizon });
        }
    }
    let plan = build_plan(config, strategies, observe, p, cm);
    let paths = map_paths(config.n_paths, config.threads, |i| {
        run_path(i, config, &plan, strategies, p, cm)
    })?;
    let k = strategies.len();
    Ok((0..observe.len())
        .map(|o| {
            (0..k)
                .map(|i| paths.iter().map(|row| row[o * k + i]).collect())
                .collect()
        })
        .collect())
}

/// Terminal surplus `X_T` under several strategies with common random
/// numbers, `[strategy][path]`.
pub fn simulate_coupled(
    config: &SimConfig,
    strategies: &[Strategy],
    p: &ModelParams,
    cm: &ClaimMeasure,
) -> Result<Vec<Vec<f64>>> {
    let mut obs = simulate_coupled_observed(config, strategies, p, cm, &[p.horizon])?;
    Ok(obs.pop().expect("one observation"))
}

/// Terminal surplus `X_T`, one entry per path.
pub fn simulate_terminal(
    config: &SimConfig,
    strategy: &Strategy,
    p: &ModelParams,
    cm: &ClaimMeasure,
) -> Result<Vec<f64>> {
    let mut s = simulate_coupled(config, std::slice::from_ref(strategy), p, cm)?;
    Ok(s.pop().expect("one strategy"))
}

/// Surplus at the given times, `[time][path]`.
pub fn simulate_observed(
    config: &SimConfig,
    strategy: &Strategy,
    p: &ModelParams,
    cm: &ClaimMeasure,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let obs = simulate_coupled_observed(config, std::slice::from_ref(strategy), p, cm, times)?;
    Ok(obs.into_iter().map(|mut per| per.pop().expect("one strategy")).collect())
}

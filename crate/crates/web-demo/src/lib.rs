//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes a model configuration as JSON text (the same format
//! the CLI reads) and returns JSON text. Failures come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use mv_reinsure::compare::{cl_value_excess, cl_value_proportional, CramerLundbergSpec};
use mv_reinsure::equilibrium::{
    equilibrium_deductible, equilibrium_investment, exponential_utility_strategy, EquilibriumStrategy,
    ValueFunctions,
};
use mv_reinsure::model::{parse_config, write_config, Config};
use mv_reinsure::simulate::{estimate_objective, simulate_terminal, SimConfig};

const MAX_PATHS: usize = 200_000;

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn config(text: &str) -> Result<Config, String> {
    parse_config(text).map_err(|e| e.to_string())
}

fn times(horizon: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| if i + 1 == n { horizon } else { horizon * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Built-in configuration `1` or `2` as JSON.
#[wasm_bindgen]
pub fn example_config(which: u32) -> String {
    let cfg = if which == 1 { Config::example1() } else { Config::example2() };
    write_config(&cfg)
}

/// `m*(t)`, `π*(t)` and the exponential-utility deductible on `n` times.
#[wasm_bindgen]
pub fn strategy_curves(config_json: &str, n: usize) -> String {
    respond((|| {
        let cfg = config(config_json)?;
        let p = cfg.params;
        let ts = times(p.horizon, n);
        let mut m = Vec::new();
        let mut pi = Vec::new();
        let mut mu = Vec::new();
        for &t in &ts {
            m.push(equilibrium_deductible(t, &p).map_err(|e| e.to_string())?);
            pi.push(equilibrium_investment(t, &p).map_err(|e| e.to_string())?);
            mu.push(exponential_utility_strategy(t, &p).map_err(|e| e.to_string())?.0);
        }
        Ok(json!({ "t": ts, "m_star": m, "pi_star": pi, "exp_utility": mu }))
    })())
}

/// `V`, `g`, `Var` under excess-loss and proportional reinsurance at
/// surplus `x` on `n` times. Needs exponential claims and `σ₁ = 0`.
#[wasm_bindgen]
pub fn compare_curves(config_json: &str, x: f64, n: usize) -> String {
    respond((|| {
        let cfg = config(config_json)?;
        let spec = CramerLundbergSpec::from_config(&cfg).map_err(|e| e.to_string())?;
        let ts = times(cfg.params.horizon, n);
        let mut cols: [Vec<f64>; 6] = Default::default();
        for &t in &ts {
            let e = cl_value_excess(x, t, &spec).map_err(|e| e.to_string())?;
            let q = cl_value_proportional(x, t, &spec).map_err(|e| e.to_string())?;
            for (c, v) in cols.iter_mut().zip([e.value, q.value, e.expectation, q.expectation, e.variance, q.variance]) {
                c.push(v);
            }
        }
        let [v1, v2, g1, g2, var1, var2] = cols;
        Ok(json!({ "t": ts, "x": x, "V1": v1, "V2": v2, "g1": g1, "g2": g2, "Var1": var1, "Var2": var2 }))
    })())
}

/// Simulates the equilibrium strategy from the configured state and
/// returns a histogram of `X_T` with the sample and closed-form moments.
#[wasm_bindgen]
pub fn simulate_histogram(config_json: &str, n_paths: usize, steps_per_unit_time: usize, seed: u32, bins: usize) -> String {
    respond((|| {
        let cfg = config(config_json)?;
        let p = cfg.params;
        if n_paths > MAX_PATHS {
            return Err(format!("at most {MAX_PATHS} paths"));
        }
        let sim = SimConfig {
            n_paths,
            steps_per_unit_time,
            seed: u64::from(seed),
            x0: cfg.x0,
            t0: cfg.t0,
            threads: None,
        };
        let strategy = EquilibriumStrategy::new(p).to_strategy();
        let xs = simulate_terminal(&sim, &strategy, &p, &cfg.claims).map_err(|e| e.to_string())?;
        let est = estimate_objective(&xs, p.gamma).map_err(|e| e.to_string())?;
        let exact = ValueFunctions::new(p, cfg.claims.clone(), cfg.quad)
            .evaluate(cfg.x0, cfg.t0)
            .map_err(|e| e.to_string())?;

        let bins = bins.clamp(1, 400);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0u64; bins];
        for &x in &xs {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        Ok(json!({
            "edges": edges,
            "counts": counts,
            "estimate": est,
            "closed_form": { "g": exact.expectation, "V": exact.value, "variance": exact.variance },
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn curves_have_requested_length_and_terminal_values() {
        let v = parse(&strategy_curves(&example_config(1), 10));
        let m = v["m_star"].as_array().unwrap();
        assert_eq!(m.len(), 10);
        assert_eq!(m[9].as_f64().unwrap(), 0.6);
        assert_eq!(v["t"][9].as_f64().unwrap(), 9.0);
    }

    #[test]
    fn comparison_shows_dominance() {
        let v = parse(&compare_curves(&example_config(2), 0.0, 7));
        let v1 = v["V1"].as_array().unwrap();
        let v2 = v["V2"].as_array().unwrap();
        for (a, b) in v1.iter().zip(v2).take(6) {
            assert!(a.as_f64().unwrap() > b.as_f64().unwrap());
        }
        assert_eq!(v1[6], v2[6]);
    }

    #[test]
    fn comparison_rejects_diffusion_config() {
        let v = parse(&compare_curves(&example_config(1), 0.0, 5));
        assert!(v["error"].as_str().unwrap().contains("sigma1"));
    }

    #[test]
    fn histogram_counts_every_path() {
        let v = parse(&simulate_histogram(&example_config(2), 3000, 50, 4, 30));
        let total: u64 = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, 3000);
        assert_eq!(v["edges"].as_array().unwrap().len(), 31);
        let mean = v["estimate"]["mean"].as_f64().unwrap();
        let se = v["estimate"]["se_mean"].as_f64().unwrap();
        let g = v["closed_form"]["g"].as_f64().unwrap();
        assert!((mean - g).abs() < 4.0 * se);
    }

    #[test]
    fn bad_input_is_an_error_object() {
        assert!(parse(&strategy_curves("{", 5))["error"].is_string());
        assert!(parse(&simulate_histogram(&example_config(2), MAX_PATHS + 1, 10, 1, 10))["error"].is_string());
    }
}

//! Sample statistics for the mean-variance objective.

use serde::Serialize;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation in input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    #[serde(rename = "J")]
    pub objective_j: f64,
    #[serde(rename = "se_J")]
    pub se_j: f64,
    pub n_paths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

struct Moments {
    n: f64,
    mean: f64,
    /// Unbiased variance.
    s2: f64,
    m3: f64,
    m4: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let d: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let sq: Vec<f64> = d.iter().map(|e| e * e).collect();
    let s2 = pairwise_sum(&sq) / (n - 1.0);
    let cube: Vec<f64> = d.iter().zip(&sq).map(|(e, q)| e * q).collect();
    let quart: Vec<f64> = sq.iter().map(|q| q * q).collect();
    Moments {
        n,
        mean,
        s2,
        m3: pairwise_sum(&cube) / n,
        m4: pairwise_sum(&quart) / n,
    }
}

/// Mean, unbiased variance and `J = mean - (γ/2) variance` with standard
/// errors. The variance error uses the fourth central moment; the error
/// of `J` is the delta-method error of its influence function
/// `(x - m) - (γ/2)((x - m)² - s²)`, which keeps the mean-variance
/// covariance `m₃`.
pub fn estimate_objective(samples: &[f64], gamma: f64) -> Result<MCEstimate> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let m = moments(samples);
    let s4 = m.s2 * m.s2;
    let se_mean = (m.s2 / m.n).sqrt();
    let var_of_var = (m.m4 - s4 * (m.n - 3.0) / (m.n - 1.0)) / m.n;
    let var_of_j = (m.s2 - gamma * m.m3 + 0.25 * gamma * gamma * (m.m4 - s4)) / m.n;
    Ok(MCEstimate {
        mean: m.mean,
        variance: m.s2,
        se_mean,
        se_variance: var_of_var.max(0.0).sqrt(),
        objective_j: m.mean - 0.5 * gamma * m.s2,
        se_j: var_of_j.max(0.0).sqrt(),
        n_paths: samples.len(),
        seed: None,
    })
}

/// Influence values of `J` for each sample.
pub fn objective_influence(samples: &[f64], gamma: f64) -> Vec<f64> {
    let m = moments(samples);
    samples
        .iter()
        .map(|x| {
            let d = x - m.mean;
            d - 0.5 * gamma * (d * d - m.s2)
        })
        .collect()
}

/// `J(a) - J(b)` for paired samples, with the standard error of the
/// paired influence difference.
pub fn paired_objective_difference(a: &[f64], b: &[f64], gamma: f64) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::Unsupported(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let ja = estimate_objective(a, gamma)?;
    let jb = estimate_objective(b, gamma)?;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let ia = objective_influence(a, gamma);
    let ib = objective_influence(b, gamma);
    let diff: Vec<f64> = ia.iter().zip(&ib).map(|(x, y)| x - y).collect();
    let n = diff.len() as f64;
    let mean = pairwise_sum(&diff) / n;
    let sq: Vec<f64> = diff.iter().map(|d| (d - mean) * (d - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    Ok((ja.objective_j - jb.objective_j, (var / n).sqrt()))
}

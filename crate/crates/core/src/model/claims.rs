//! Finite-activity Lévy claim measure `nu = lambda * F`.
//!
//! All ν-integrals the closed forms need reduce to two limited moments of
//! the severity `Y`:
//!
//! ```text
//! ∫_0^m S(y) dy    = E[min(Y, m)]
//! ∫_0^m y S(y) dy  = E[min(Y, m)^2] / 2
//! ```
//!
//! These are exact for every supported severity. For an empirical severity
//! they are evaluated on the empirical measure itself (prefix sums over the
//! sorted sample), which is the measure the sampler draws from.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::quadrature::{self, QuadSettings};

/// Sorted sample with cached prefix sums of `y` and `y^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmpiricalRepr", into = "EmpiricalRepr")]
pub struct EmpiricalSeverity {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EmpiricalRepr {
    samples: Vec<f64>,
}

impl TryFrom<EmpiricalRepr> for EmpiricalSeverity {
    type Error = String;

    fn try_from(r: EmpiricalRepr) -> std::result::Result<Self, String> {
        EmpiricalSeverity::new(r.samples).map_err(|e| e.to_string())
    }
}

impl From<EmpiricalSeverity> for EmpiricalRepr {
    fn from(e: EmpiricalSeverity) -> Self {
        EmpiricalRepr { samples: e.sorted }
    }
}

impl EmpiricalSeverity {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation(vec![Violation::new(
                "claims.severity.samples",
                "must be non-empty",
            )]));
        }
        if samples.iter().any(|y| !y.is_finite() || *y < 0.0) {
            return Err(Error::Validation(vec![Violation::new(
                "claims.severity.samples",
                "must be finite and >= 0",
            )]));
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        let mut prefix = Vec::with_capacity(samples.len() + 1);
        let mut prefix_sq = Vec::with_capacity(samples.len() + 1);
        let (mut s, mut s2) = (0.0, 0.0);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        for &y in &samples {
            s += y;
            s2 += y * y;
            prefix.push(s);
            prefix_sq.push(s2);
        }
        Ok(Self {
            sorted: samples,
            prefix,
            prefix_sq,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }

    fn limited(&self, m: f64) -> (f64, f64) {
        let k = self.sorted.partition_point(|&y| y < m);
        let above = (self.sorted.len() - k) as f64;
        let n = self.n();
        (
            (self.prefix[k] + m * above) / n,
            (self.prefix_sq[k] + m * m * above) / n,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Severity {
    Exponential { rate: f64 },
    PointMass { size: f64 },
    Empirical(EmpiricalSeverity),
}

/// `1 - e^{-x}(1 + x)` without cancellation for small `x`.
fn one_minus_gamma2_tail(x: f64) -> f64 {
    if x < 0.1 {
        // sum_{k>=2} (-1)^k (k-1) x^k / k!
        let mut term = x * x / 2.0; // x^k / k! at k = 2
        let mut sum = term;
        for k in 3..20 {
            term *= x / k as f64;
            let signed = if k % 2 == 0 { term } else { -term };
            sum += signed * (k - 1) as f64;
        }
        sum
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

impl Severity {
    pub fn exponential(rate: f64) -> Self {
        Severity::Exponential { rate }
    }

    pub fn point_mass(size: f64) -> Self {
        Severity::PointMass { size }
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(Severity::Empirical(EmpiricalSeverity::new(samples)?))
    }

    fn violations(&self) -> Vec<Violation> {
        match self {
            Severity::Exponential { rate } if !(rate.is_finite() && *rate > 0.0) => {
                vec![Violation::new("claims.severity.rate", "must be > 0")]
            }
            Severity::PointMass { size } if !(size.is_finite() && *size > 0.0) => {
                vec![Violation::new("claims.severity.size", "must be > 0")]
            }
            _ => Vec::new(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Severity::Exponential { rate } => 1.0 / rate,
            Severity::PointMass { size } => *size,
            Severity::Empirical(e) => e.prefix[e.sorted.len()] / e.n(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Severity::Exponential { rate } => 2.0 / (rate * rate),
            Severity::PointMass { size } => size * size,
            Severity::Empirical(e) => e.prefix_sq[e.sorted.len()] / e.n(),
        }
    }

    /// `E[min(Y, m)]`.
    pub fn limited_mean(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        match self {
            Severity::Exponential { rate } => -(-rate * m).exp_m1() / rate,
            Severity::PointMass { size } => size.min(m),
            Severity::Empirical(e) => e.limited(m).0,
        }
    }

    /// `E[min(Y, m)^2]`.
    pub fn limited_second_moment(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        match self {
            Severity::Exponential { rate } => {
                2.0 * one_minus_gamma2_tail(rate * m) / (rate * rate)
            }
            Severity::PointMass { size } => {
                let c = size.min(m);
                c * c
            }
            Severity::Empirical(e) => e.limited(m).1,
        }
    }

    /// Claim sizes carrying positive probability.
    pub fn atoms(&self) -> &[f64] {
        match self {
            Severity::Exponential { .. } => &[],
            Severity::PointMass { size } => std::slice::from_ref(size),
            Severity::Empirical(e) => &e.sorted,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Severity::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Severity::PointMass { size } => *size,
            Severity::Empirical(e) => e.sorted[rng.random_range(0..e.sorted.len())],
        }
    }
}

/// Claim measure `nu(dz) = intensity * F(dz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimMeasure {
    pub intensity: f64,
    pub severity: Severity,
}

impl ClaimMeasure {
    pub fn new(intensity: f64, severity: Severity) -> Result<Self> {
        let cm = Self {
            intensity,
            severity,
        };
        let v = cm.violations();
        if v.is_empty() {
            Ok(cm)
        } else {
            Err(Error::Validation(v))
        }
    }

    /// No claims at all.
    pub fn none() -> Self {
        Self {
            intensity: 0.0,
            severity: Severity::exponential(1.0),
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            v.push(Violation::new("claims.lambda", "must be >= 0"));
        }
        v.extend(self.severity.violations());
        v
    }

    /// `∫ z nu(dz)`.
    pub fn mean(&self) -> f64 {
        self.intensity * self.severity.mean()
    }

    /// `∫ z^2 nu(dz)`.
    pub fn second_moment(&self) -> f64 {
        self.intensity * self.severity.second_moment()
    }

    /// `lambda * ∫_0^m S(y) dy`, equal to `∫ (m ∧ z) nu(dz)`.
    pub fn partial_survival_integral(&self, m: f64) -> f64 {
        self.intensity * self.severity.limited_mean(m)
    }

    /// `lambda * ∫_0^m y S(y) dy`, equal to `½ ∫ (m ∧ z)^2 nu(dz)`.
    pub fn partial_tail_moment(&self, m: f64) -> f64 {
        0.5 * self.intensity * self.severity.limited_second_moment(m)
    }

    /// `∫ f(z) nu(dz)` by direct evaluation against the measure, without the
    /// closed forms. `kinks` are points where `f` is not smooth.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        f: F,
        kinks: &[f64],
        quad: &QuadSettings,
    ) -> Result<f64> {
        if self.intensity == 0.0 {
            return Ok(0.0);
        }
        let expectation = match &self.severity {
            Severity::Exponential { rate } => {
                let last = kinks.iter().copied().fold(0.0, f64::max);
                let upper = last + 60.0 / rate;
                quadrature::integrate_split(
                    |z| f(z) * rate * (-rate * z).exp(),
                    0.0,
                    upper,
                    kinks,
                    quad,
                )?
            }
            Severity::PointMass { size } => f(*size),
            Severity::Empirical(e) => e.sorted.iter().map(|&y| f(y)).sum::<f64>() / e.n(),
        };
        Ok(self.intensity * expectation)
    }

    pub fn sample_severity<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.severity.sample(rng)
    }
}

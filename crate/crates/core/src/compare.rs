//! Classical Cramér–Lundberg specialisation with exponential claims:
//! excess-loss against proportional reinsurance.
//!
//! Both value functions are written out here for `σ₁ = 0` and claim sizes
//! `Exp(κ)` with intensity `λ`, using
//!
//! ```text
//! ∫₀^m S(y) dy   = (1 - e^{-κm}) / κ
//! ∫₀^m y S(y) dy = (1 - e^{-κm}(1 + κm)) / κ²
//! ```
//!
//! rather than the general claim-measure code, so they double as an
//! independent check on it.

use std::io::Write;

use serde::Serialize;

use crate::equilibrium::{checked_variance, proportional_equilibrium_fraction, ValuePoint};
use crate::error::{Error, Result, Violation};
use crate::model::{ClaimMeasure, Config, ModelParams, Severity};
use crate::quadrature::{self, QuadSettings};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CramerLundbergSpec {
    pub params: ModelParams,
    pub lambda: f64,
    pub kappa: f64,
    pub quad: QuadSettings,
}

impl CramerLundbergSpec {
    pub fn new(params: ModelParams, lambda: f64, kappa: f64) -> Result<Self> {
        let spec = Self {
            params,
            lambda,
            kappa,
            quad: QuadSettings::default(),
        };
        let mut v = params.violations();
        if !(lambda > 0.0 && lambda.is_finite()) {
            v.push(Violation::new("lambda", "must be > 0"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            v.push(Violation::new("kappa", "must be > 0"));
        }
        if params.sigma1 != 0.0 {
            v.push(Violation::new("sigma1", "must be 0 in the Cramér–Lundberg model"));
        }
        if v.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn example2() -> Self {
        Self::new(ModelParams::example2(), 1.0, 0.5).expect("valid")
    }

    /// Requires exponential severity and `σ₁ = 0`.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        match cfg.claims.severity {
            Severity::Exponential { rate } => {
                let mut s = Self::new(cfg.params, cfg.claims.intensity, rate)?;
                s.quad = cfg.quad;
                Ok(s)
            }
            _ => Err(Error::Unsupported(
                "the comparison needs exponential claim sizes".into(),
            )),
        }
    }

    pub fn claim_measure(&self) -> ClaimMeasure {
        ClaimMeasure {
            intensity: self.lambda,
            severity: Severity::Exponential { rate: self.kappa },
        }
    }

    fn growth(&self, s: f64) -> f64 {
        (self.params.r * (self.params.horizon - s)).exp()
    }

    fn sharpe_sq(&self) -> f64 {
        let p = &self.params;
        ((p.mu - p.r) / p.sigma2).powi(2)
    }

    /// `(λ∫ℓν-linear part, λ∫ℓ²ν)` for the deductible `(η/γ)e^{-r(T-s)}`.
    fn excess_moments(&self, s: f64) -> (f64, f64) {
        let p = &self.params;
        let m = p.eta / p.gamma / self.growth(s);
        let x = self.kappa * m;
        let survival = -(-x).exp_m1() / self.kappa;
        let first_moment = (-(-x).exp_m1() - x * (-x).exp()) / (self.kappa * self.kappa);
        (self.lambda * survival, 2.0 * self.lambda * first_moment)
    }

    fn integrands(&self, s: f64, retained: f64, retained_sq: f64) -> (f64, f64) {
        let p = &self.params;
        let a = self.growth(s);
        let linear = (p.theta - p.eta) * self.lambda / self.kappa + p.eta * retained;
        let value = self.sharpe_sq() / (2.0 * p.gamma) + a * linear - 0.5 * p.gamma * a * a * retained_sq;
        let expectation = self.sharpe_sq() / p.gamma + a * linear;
        (value, expectation)
    }

    fn point(&self, x: f64, t: f64, value_i: impl Fn(f64) -> f64, exp_i: impl Fn(f64) -> f64, kinks: &[f64]) -> Result<ValuePoint> {
        let p = &self.params;
        p.check_time(t)?;
        let a = self.growth(t);
        let b_v = quadrature::integrate_split(value_i, t, p.horizon, kinks, &self.quad)?;
        let b_g = quadrature::integrate_split(exp_i, t, p.horizon, kinks, &self.quad)?;
        let value = a * x + b_v;
        let expectation = a * x + b_g;
        Ok(ValuePoint {
            value,
            expectation,
            variance: checked_variance(p.gamma, expectation, value)?,
        })
    }

    /// Time at which the proportional fraction reaches 1, if inside `(t, T)`.
    fn proportional_cap_time(&self, t: f64) -> Vec<f64> {
        let p = &self.params;
        let level = p.eta * self.kappa / (2.0 * p.gamma);
        if level <= 1.0 {
            return Vec::new();
        }
        let s = p.horizon - level.ln() / p.r;
        if s > t && s < p.horizon {
            vec![s]
        } else {
            Vec::new()
        }
    }
}

/// `(V₁, g₁, Var₁)` under the equilibrium excess-loss strategy.
pub fn cl_value_excess(x: f64, t: f64, spec: &CramerLundbergSpec) -> Result<ValuePoint> {
    let value_i = |s: f64| {
        let (l1, l2) = spec.excess_moments(s);
        spec.integrands(s, l1, l2).0
    };
    let exp_i = |s: f64| {
        let (l1, l2) = spec.excess_moments(s);
        spec.integrands(s, l1, l2).1
    };
    spec.point(x, t, value_i, exp_i, &[])
}

/// `(V₂, g₂, Var₂)` under the equilibrium quota-share strategy.
pub fn cl_value_proportional(x: f64, t: f64, spec: &CramerLundbergSpec) -> Result<ValuePoint> {
    let p = &spec.params;
    let cm = spec.claim_measure();
    let mean = 1.0 / spec.kappa;
    let second = 2.0 / (spec.kappa * spec.kappa);
    let moments = |s: f64| {
        let q = proportional_equilibrium_fraction(s, p, &cm).unwrap_or(f64::NAN);
        (q * spec.lambda * mean, q * q * spec.lambda * second)
    };
    let value_i = |s: f64| {
        let (l1, l2) = moments(s);
        spec.integrands(s, l1, l2).0
    };
    let exp_i = |s: f64| {
        let (l1, l2) = moments(s);
        spec.integrands(s, l1, l2).1
    };
    spec.point(x, t, value_i, exp_i, &spec.proportional_cap_time(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceRow {
    pub t: f64,
    pub x: f64,
    #[serde(rename = "V1")]
    pub v1: f64,
    #[serde(rename = "V2")]
    pub v2: f64,
    pub g1: f64,
    pub g2: f64,
    #[serde(rename = "Var1")]
    pub var1: f64,
    #[serde(rename = "Var2")]
    pub var2: f64,
}

pub const DOMINANCE_COLUMNS: [&str; 8] = ["t", "x", "V1", "V2", "g1", "g2", "Var1", "Var2"];

/// One row per `(x, t)` grid point, in grid order.
pub fn dominance_table(grid: &[(f64, f64)], spec: &CramerLundbergSpec) -> Result<Vec<DominanceRow>> {
    crate::par_map(grid, |&(x, t)| {
        let e = cl_value_excess(x, t, spec)?;
        let q = cl_value_proportional(x, t, spec)?;
        Ok(DominanceRow {
            t,
            x,
            v1: e.value,
            v2: q.value,
            g1: e.expectation,
            g2: q.expectation,
            var1: e.variance,
            var2: q.variance,
        })
    })
    .into_iter()
    .collect()
}

pub fn dominance_to_table(rows: &[DominanceRow]) -> Table {
    let mut t = Table::new(DOMINANCE_COLUMNS);
    for r in rows {
        t.push(vec![r.t, r.x, r.v1, r.v2, r.g1, r.g2, r.var1, r.var2]);
    }
    t
}

/// CSV with header `t,x,V1,V2,g1,g2,Var1,Var2`, 12 significant digits.
pub fn write_dominance_csv<W: Write>(w: W, rows: &[DominanceRow]) -> Result<()> {
    dominance_to_table(rows).write_csv(w, &[])?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::ValueFunctions;
    use approx::assert_abs_diff_eq;

    #[test]
    fn terminal_rows() {
        let spec = CramerLundbergSpec::example2();
        for x in [0.0, 5.0, -2.0] {
            let e = cl_value_excess(x, 3.0, &spec).unwrap();
            let q = cl_value_proportional(x, 3.0, &spec).unwrap();
            assert_eq!((e.value, e.variance, q.value), (x, 0.0, x));
        }
    }

    #[test]
    fn matches_general_module() {
        let spec = CramerLundbergSpec::example2();
        let vf = ValueFunctions::new(spec.params, spec.claim_measure(), spec.quad);
        for &(x, t) in &[(0.0, 0.0), (5.0, 1.3), (-4.0, 2.9)] {
            let a = cl_value_excess(x, t, &spec).unwrap();
            let b = vf.evaluate(x, t).unwrap();
            assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-9);
            assert_abs_diff_eq!(a.expectation, b.expectation, epsilon = 1e-9);
        }
    }

    #[test]
    fn matches_general_module_on_small_deductibles() {
        // κm < 0.1 puts the general module on its series branch.
        let p = ModelParams { gamma: 500.0, ..ModelParams::example2() };
        let spec = CramerLundbergSpec::new(p, 0.7, 40.0).unwrap();
        let vf = ValueFunctions::new(spec.params, spec.claim_measure(), spec.quad);
        for &(x, t) in &[(0.0, 0.0), (2.0, 1.7)] {
            let a = cl_value_excess(x, t, &spec).unwrap();
            let b = vf.evaluate(x, t).unwrap();
            assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-9);
            assert_abs_diff_eq!(a.variance, b.variance, epsilon = 1e-9);
        }
    }

    #[test]
    fn excess_loss_dominates() {
        let spec = CramerLundbergSpec::example2();
        for t in [0.0, 1.0, 2.0] {
            let e = cl_value_excess(0.0, t, &spec).unwrap();
            let q = cl_value_proportional(0.0, t, &spec).unwrap();
            assert!(e.value > q.value);
        }
        let e = cl_value_excess(0.0, 0.0, &spec).unwrap();
        let q = cl_value_proportional(0.0, 0.0, &spec).unwrap();
        assert!(e.expectation > q.expectation && e.variance > q.variance);
    }

    #[test]
    fn gap_is_independent_of_x() {
        let spec = CramerLundbergSpec::example2();
        let gap = |x| {
            cl_value_excess(x, 0.7, &spec).unwrap().value - cl_value_proportional(x, 0.7, &spec).unwrap().value
        };
        assert_abs_diff_eq!(gap(0.0), gap(10.0), epsilon = 1e-12);
    }

    #[test]
    fn capped_fraction_is_handled() {
        let p = ModelParams { eta: 3.0, ..ModelParams::example2() };
        let spec = CramerLundbergSpec::new(p, 1.0, 1.0).unwrap();
        // q* = min(1, 3 e^{-r(T-s)}) stays capped; compare with full retention.
        let q = cl_value_proportional(0.0, 0.0, &spec).unwrap();
        let full = {
            let f = |s: f64| spec.integrands(s, 1.0, 2.0).0;
            quadrature::integrate(f, 0.0, 3.0, &spec.quad).unwrap()
        };
        assert_abs_diff_eq!(q.value, full, epsilon = 1e-9);
    }

    #[test]
    fn rejects_diffusion_and_bad_rates() {
        let p = ModelParams::example1();
        match CramerLundbergSpec::new(p, 0.0, -1.0) {
            Err(Error::Validation(v)) => {
                let f: Vec<_> = v.iter().map(|x| x.field.as_str()).collect();
                assert_eq!(f, vec!["lambda", "kappa", "sigma1"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_has_expected_header() {
        let spec = CramerLundbergSpec::example2();
        let rows = dominance_table(&[(0.0, 0.0), (5.0, 3.0)], &spec).unwrap();
        let mut buf = Vec::new();
        write_dominance_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,V1,V2,g1,g2,Var1,Var2\n"));
        assert!(text.lines().nth(2).unwrap().starts_with("3,5,5,5,5,5,0,0"));
    }
}

//! Closed-form equilibrium strategy and the separable value functions.
//!
//! The equilibrium retention is excess-loss with deductible
//! `m*(t) = (η/γ) e^{-r(T-t)}`, and the equilibrium dollar amount in the
//! risky asset is `π*(t) = (μ-r)/(γσ₂²) e^{-r(T-t)} - ρσ₁/σ₂`.
//!
//! The value function and the expected terminal wealth are affine in the
//! surplus, `V = e^{r(T-t)} x + B(t)` and `g = e^{r(T-t)} x + b(t)`, with
//! intercepts given by time integrals of explicit integrands. Those
//! integrands are exposed directly so that `B'` and `b'` can be used
//! analytically elsewhere.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClaimMeasure, ModelParams, Retention, Schedule, Strategy};
use crate::quadrature::{self, QuadSettings};

/// `m*(t)`.
pub fn equilibrium_deductible(t: f64, p: &ModelParams) -> Result<f64> {
    p.check_time(t)?;
    Ok(deductible_unchecked(t, p))
}

/// `π*(t)`; negative values are short positions.
pub fn equilibrium_investment(t: f64, p: &ModelParams) -> Result<f64> {
    p.check_time(t)?;
    Ok(investment_unchecked(t, p))
}

#[inline]
fn deductible_unchecked(t: f64, p: &ModelParams) -> f64 {
    p.eta / p.gamma / p.growth(t)
}

#[inline]
fn investment_unchecked(t: f64, p: &ModelParams) -> f64 {
    (p.mu - p.r) / (p.gamma * p.sigma2 * p.sigma2) / p.growth(t) - p.rho * p.sigma1 / p.sigma2
}

/// The equilibrium pair `(ℓ*, π*)` as schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumStrategy {
    pub params: ModelParams,
}

impl EquilibriumStrategy {
    pub fn new(params: ModelParams) -> Self {
        Self { params }
    }

    pub fn deductible(&self, t: f64) -> Result<f64> {
        equilibrium_deductible(t, &self.params)
    }

    pub fn investment(&self, t: f64) -> Result<f64> {
        equilibrium_investment(t, &self.params)
    }

    /// `ℓ*(z, t) = m*(t) ∧ z`.
    pub fn retained(&self, z: f64, t: f64) -> Result<f64> {
        Ok(z.min(self.deductible(t)?))
    }

    pub fn retention(&self) -> Retention {
        let p = &self.params;
        Retention::excess_loss(Schedule::discounted(p.eta / p.gamma, p.r, p.horizon))
    }

    pub fn investment_schedule(&self) -> Schedule {
        let p = &self.params;
        Schedule::Discounted {
            level: (p.mu - p.r) / (p.gamma * p.sigma2 * p.sigma2),
            rate: p.r,
            horizon: p.horizon,
            offset: -p.rho * p.sigma1 / p.sigma2,
            cap: f64::INFINITY,
        }
    }

    pub fn to_strategy(&self) -> Strategy {
        Strategy::new(self.retention(), self.investment_schedule(), self.params.horizon)
    }
}

/// Optimal strategy for exponential utility `-e^{-γx}`: the deductible is
/// `ln(1+η)/γ · e^{-r(T-t)}` and the investment equals `π*`.
pub fn exponential_utility_strategy(t: f64, p: &ModelParams) -> Result<(f64, f64)> {
    p.check_time(t)?;
    let deductible = p.eta.ln_1p() / p.gamma / p.growth(t);
    Ok((deductible, investment_unchecked(t, p)))
}

pub fn exponential_utility_retention(p: &ModelParams) -> Retention {
    Retention::excess_loss(Schedule::discounted(p.eta.ln_1p() / p.gamma, p.r, p.horizon))
}

/// Time-`T` retained claim of the pre-commitment problem for a given
/// auxiliary multiplier `alpha`: `η (α/γ - x)_+ ∧ z`.
pub fn precommit_terminal_retention(z: f64, x: f64, alpha: f64, p: &ModelParams) -> f64 {
    let d = p.eta * (alpha / p.gamma - x).max(0.0);
    d.min(z)
}

/// Equilibrium quota-share retention when reinsurance is restricted to
/// proportional treaties `ℓ(z, t) = q z`.
///
/// Not taken from a printed formula: restricting the extended HJB
/// supremand to `ℓ = q z` leaves, after dividing by `e^{r(T-t)}`,
///
/// ```text
/// η q λE[Y] - (γ/2) e^{r(T-t)} q² λE[Y²]
/// ```
///
/// whose maximiser over `q ∈ [0, 1]` is
/// `q*(t) = min(1, η E[Y] / (γ E[Y²]) · e^{-r(T-t)})`. The investment part
/// of the supremand is unchanged, so `π*` is shared.
pub fn proportional_equilibrium_fraction(
    t: f64,
    p: &ModelParams,
    cm: &ClaimMeasure,
) -> Result<f64> {
    p.check_time(t)?;
    Ok(proportional_equilibrium_schedule(p, cm)?.at(t))
}

pub fn proportional_equilibrium_schedule(p: &ModelParams, cm: &ClaimMeasure) -> Result<Schedule> {
    let m2 = cm.severity.second_moment();
    if !(m2 > 0.0) {
        return Err(Error::ZeroSecondMoment);
    }
    Ok(Schedule::Discounted {
        level: p.eta * cm.severity.mean() / (p.gamma * m2),
        rate: p.r,
        horizon: p.horizon,
        offset: 0.0,
        cap: 1.0,
    })
}

/// Integrand of `B`, i.e. `-B'(s)`.
pub fn value_integrand(s: f64, p: &ModelParams, cm: &ClaimMeasure) -> f64 {
    let a = p.growth(s);
    let m = p.eta / p.gamma / a;
    let linear = -(p.mu - p.r) * p.rho * p.sigma1 / p.sigma2
        + (p.theta - p.eta) * cm.mean()
        + p.eta * cm.partial_survival_integral(m);
    let quadratic =
        (1.0 - p.rho * p.rho) * p.sigma1 * p.sigma1 + 2.0 * cm.partial_tail_moment(m);
    p.sharpe_sq() / (2.0 * p.gamma) + a * linear - 0.5 * p.gamma * a * a * quadratic
}

/// Integrand of `b`, i.e. `-b'(s)`.
pub fn expectation_integrand(s: f64, p: &ModelParams, cm: &ClaimMeasure) -> f64 {
    let a = p.growth(s);
    let m = p.eta / p.gamma / a;
    let linear = -(p.mu - p.r) * p.rho * p.sigma1 / p.sigma2
        + (p.theta - p.eta) * cm.mean()
        + p.eta * cm.partial_survival_integral(m);
    p.sharpe_sq() / p.gamma + a * linear
}

/// Times in `(a, b)` where `m*(s)` crosses an atom of the severity.
pub fn deductible_crossings(p: &ModelParams, cm: &ClaimMeasure, a: f64, b: f64) -> Vec<f64> {
    cm.severity
        .atoms()
        .iter()
        .filter(|&&y| y > 0.0)
        .map(|&y| p.horizon - (p.eta / (p.gamma * y)).ln() / p.r)
        .filter(|&s| s > a && s < b)
        .collect()
}

/// `B(t) = ∫_t^T value_integrand(s) ds`.
pub fn value_intercept(t: f64, p: &ModelParams, cm: &ClaimMeasure, quad: &QuadSettings) -> Result<f64> {
    p.check_time(t)?;
    let kinks = deductible_crossings(p, cm, t, p.horizon);
    quadrature::integrate_split(|s| value_integrand(s, p, cm), t, p.horizon, &kinks, quad)
}

/// `b(t) = ∫_t^T expectation_integrand(s) ds`.
pub fn expectation_intercept(
    t: f64,
    p: &ModelParams,
    cm: &ClaimMeasure,
    quad: &QuadSettings,
) -> Result<f64> {
    p.check_time(t)?;
    let kinks = deductible_crossings(p, cm, t, p.horizon);
    quadrature::integrate_split(|s| expectation_integrand(s, p, cm), t, p.horizon, &kinks, quad)
}

pub(crate) fn checked_variance(gamma: f64, g: f64, v: f64) -> Result<f64> {
    let var = 2.0 / gamma * (g - v);
    let slack = 1e-9 * (1.0 + g.abs().max(v.abs()));
    if var < -slack {
        return Err(Error::NegativeVariance(var));
    }
    Ok(var.max(0.0))
}

/// `V(x, t)`.
pub fn value_v(x: f64, t: f64, p: &ModelParams, cm: &ClaimMeasure, quad: &QuadSettings) -> Result<f64> {
    Ok(p.growth(t) * x + value_intercept(t, p, cm, quad)?)
}

/// `g(x, t) = E_{x,t}[X_T]` under the equilibrium strategy.
pub fn expectation_g(x: f64, t: f64, p: &ModelParams, cm: &ClaimMeasure, quad: &QuadSettings) -> Result<f64> {
    Ok(p.growth(t) * x + expectation_intercept(t, p, cm, quad)?)
}

/// `Var_{x,t}[X_T] = (2/γ)(g - V)`.
pub fn variance_mv(x: f64, t: f64, p: &ModelParams, cm: &ClaimMeasure, quad: &QuadSettings) -> Result<f64> {
    let v = value_v(x, t, p, cm, quad)?;
    let g = expectation_g(x, t, p, cm, quad)?;
    checked_variance(p.gamma, g, v)
}

/// `(V, g, Var)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValuePoint {
    pub value: f64,
    pub expectation: f64,
    pub variance: f64,
}

/// Equilibrium value function `V` and expectation function `g` for a
/// fixed model.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    pub params: ModelParams,
    pub claims: ClaimMeasure,
    pub quad: QuadSettings,
}

impl ValueFunctions {
    pub fn new(params: ModelParams, claims: ClaimMeasure, quad: QuadSettings) -> Self {
        Self {
            params,
            claims,
            quad,
        }
    }

    pub fn value_intercept(&self, t: f64) -> Result<f64> {
        value_intercept(t, &self.params, &self.claims, &self.quad)
    }

    pub fn expectation_intercept(&self, t: f64) -> Result<f64> {
        expectation_intercept(t, &self.params, &self.claims, &self.quad)
    }

    /// `B'(t)`, analytic.
    pub fn value_intercept_derivative(&self, t: f64) -> f64 {
        -value_integrand(t, &self.params, &self.claims)
    }

    /// `b'(t)`, analytic.
    pub fn expectation_intercept_derivative(&self, t: f64) -> f64 {
        -expectation_integrand(t, &self.params, &self.claims)
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        value_v(x, t, &self.params, &self.claims, &self.quad)
    }

    pub fn expectation(&self, x: f64, t: f64) -> Result<f64> {
        expectation_g(x, t, &self.params, &self.claims, &self.quad)
    }

    pub fn variance(&self, x: f64, t: f64) -> Result<f64> {
        variance_mv(x, t, &self.params, &self.claims, &self.quad)
    }

    pub fn evaluate(&self, x: f64, t: f64) -> Result<ValuePoint> {
        let value = self.value(x, t)?;
        let expectation = self.expectation(x, t)?;
        Ok(ValuePoint {
            value,
            expectation,
            variance: checked_variance(self.params.gamma, expectation, value)?,
        })
    }

    /// Tabulates `B` and `b` on `n` uniform nodes over `[0, T]`.
    pub fn tabulate(&self, n: usize) -> Result<InterceptTable> {
        InterceptTable::build(&self.params, &self.claims, &self.quad, n)
    }
}

/// `B` and `b` on a uniform grid with exact nodal derivatives, read back
/// by cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct InterceptTable {
    horizon: f64,
    step: f64,
    value: Vec<f64>,
    value_slope: Vec<f64>,
    expectation: Vec<f64>,
    expectation_slope: Vec<f64>,
}

pub const DEFAULT_TABLE_POINTS: usize = 512;

impl InterceptTable {
    pub fn build(p: &ModelParams, cm: &ClaimMeasure, quad: &QuadSettings, n: usize) -> Result<Self> {
        let n = n.max(2);
        let step = p.horizon / (n - 1) as f64;
        let node = |i: usize| if i == n - 1 { p.horizon } else { i as f64 * step };
        let seg_quad = QuadSettings {
            abs_tol: quad.abs_tol / n as f64,
            ..*quad
        };
        let mut value = vec![0.0; n];
        let mut expectation = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let (a, b) = (node(i), node(i + 1));
            let kinks = deductible_crossings(p, cm, a, b);
            value[i] = value[i + 1]
                + quadrature::integrate_split(|s| value_integrand(s, p, cm), a, b, &kinks, &seg_quad)?;
            expectation[i] = expectation[i + 1]
                + quadrature::integrate_split(
                    |s| expectation_integrand(s, p, cm),
                    a,
                    b,
                    &kinks,
                    &seg_quad,
                )?;
        }
        let value_slope = (0..n).map(|i| -value_integrand(node(i), p, cm)).collect();
        let expectation_slope = (0..n).map(|i| -expectation_integrand(node(i), p, cm)).collect();
        Ok(Self {
            horizon: p.horizon,
            step,
            value,
            value_slope,
            expectation,
            expectation_slope,
        })
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    fn hermite(&self, y: &[f64], dy: &[f64], t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        let n = y.len();
        let i = ((t / self.step).floor() as usize).min(n - 2);
        let h = self.step;
        let s = (t - i as f64 * h) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]
    }

    /// Interpolated `B(t)`.
    pub fn value_intercept(&self, t: f64) -> f64 {
        self.hermite(&self.value, &self.value_slope, t)
    }

    /// Interpolated `b(t)`.
    pub fn expectation_intercept(&self, t: f64) -> f64 {
        self.hermite(&self.expectation, &self.expectation_slope, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Severity;
    use approx::assert_abs_diff_eq;

    fn ex1() -> ModelParams {
        ModelParams::example1()
    }

    fn ex2_claims() -> ClaimMeasure {
        ClaimMeasure::new(1.0, Severity::exponential(0.5)).unwrap()
    }

    #[test]
    fn deductible_examples() {
        let p = ex1();
        assert_abs_diff_eq!(equilibrium_deductible(9.0, &p).unwrap(), 0.6, epsilon = 1e-15);
        // 0.6 * e^{-0.45}
        assert_abs_diff_eq!(equilibrium_deductible(0.0, &p).unwrap(), 0.382577, epsilon = 5e-7);
        let stiff = ModelParams { gamma: 1000.0, ..p };
        assert_abs_diff_eq!(equilibrium_deductible(9.0, &stiff).unwrap(), 0.0006, epsilon = 1e-15);
        assert!(equilibrium_deductible(9.5, &p).is_err());
    }

    #[test]
    fn investment_examples() {
        let p = ex1();
        assert_abs_diff_eq!(equilibrium_investment(9.0, &p).unwrap(), 0.222222, epsilon = 5e-7);
        assert_abs_diff_eq!(equilibrium_investment(0.0, &p).unwrap(), 0.020904, epsilon = 1e-6);
        let unit = ModelParams {
            rho: 0.0,
            mu: p.r + p.gamma * p.sigma2 * p.sigma2,
            ..p
        };
        assert_abs_diff_eq!(equilibrium_investment(9.0, &unit).unwrap(), 1.0, epsilon = 1e-14);
        assert!(equilibrium_investment(-1.0, &p).is_err());
    }

    #[test]
    fn strategy_schedules_match_formulas() {
        let p = ex1();
        let eq = EquilibriumStrategy::new(p);
        let s = eq.to_strategy();
        for t in [0.0, 1.0, 4.5, 9.0] {
            assert_abs_diff_eq!(s.investment_at(t), eq.investment(t).unwrap(), epsilon = 1e-15);
            for z in [0.1, 0.5, 3.0] {
                assert_abs_diff_eq!(
                    s.retained_claim(z, t).unwrap(),
                    eq.retained(z, t).unwrap(),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn exponential_utility_examples() {
        let p = ex1();
        let (d, pi) = exponential_utility_strategy(9.0, &p).unwrap();
        assert_abs_diff_eq!(d, 0.470004, epsilon = 5e-7);
        assert_eq!(pi, equilibrium_investment(9.0, &p).unwrap());
        let tiny = ModelParams { eta: 1e-6, ..p };
        for t in [0.0, 3.0, 9.0] {
            let (d, _) = exponential_utility_strategy(t, &tiny).unwrap();
            let ratio = d / equilibrium_deductible(t, &tiny).unwrap();
            assert!((ratio - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn precommit_examples() {
        let p = ModelParams { gamma: 1.0, eta: 0.6, ..ex1() };
        assert_eq!(precommit_terminal_retention(10.0, 2.0, 2.0, &p), 0.0);
        assert_abs_diff_eq!(precommit_terminal_retention(10.0, 0.0, 2.0, &p), 1.2, epsilon = 1e-15);
        assert_eq!(precommit_terminal_retention(0.5, 0.0, 2.0, &p), 0.5);
        assert_eq!(precommit_terminal_retention(10.0, 5.0, 2.0, &p), 0.0);
    }

    /// Maximises the restricted supremand on a q-grid with step 1e-4.
    fn grid_search_fraction(t: f64, p: &ModelParams, cm: &ClaimMeasure) -> f64 {
        let a = p.growth(t);
        let (m1, m2) = (cm.severity.mean(), cm.severity.second_moment());
        let f = |q: f64| p.eta * q * m1 - 0.5 * p.gamma * a * q * q * m2;
        (0..=10_000)
            .map(|k| k as f64 * 1e-4)
            .max_by(|x, y| f(*x).total_cmp(&f(*y)))
            .unwrap()
    }

    #[test]
    fn proportional_fraction_matches_grid_search() {
        let p = ModelParams::example2();
        let cm = ex2_claims();
        let q = proportional_equilibrium_fraction(3.0, &p, &cm).unwrap();
        assert_abs_diff_eq!(q, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(grid_search_fraction(3.0, &p, &cm), 0.3, epsilon = 1e-4);
        for t in [0.0, 1.0, 2.5] {
            let q = proportional_equilibrium_fraction(t, &p, &cm).unwrap();
            assert!((q - grid_search_fraction(t, &p, &cm)).abs() <= 1e-4);
        }

        let clamp = ModelParams { eta: 4.0, ..p };
        assert_eq!(proportional_equilibrium_fraction(3.0, &clamp, &cm).unwrap(), 1.0);
        assert_eq!(grid_search_fraction(3.0, &clamp, &cm), 1.0);

        let averse = ModelParams { gamma: 1e9, ..p };
        let q = proportional_equilibrium_fraction(3.0, &averse, &cm).unwrap();
        assert!(q > 0.0 && q < 1e-8);
    }

    #[test]
    fn no_claims_no_diffusion_intercepts() {
        let p = ModelParams {
            sigma1: 0.0,
            theta: 0.6,
            eta: 0.6,
            ..ex1()
        };
        let cm = ClaimMeasure::none();
        let q = QuadSettings::default();
        for t in [0.0, 2.0, 9.0] {
            let expect_b = (9.0 - t) * p.sharpe_sq() / (2.0 * p.gamma);
            assert_abs_diff_eq!(value_intercept(t, &p, &cm, &q).unwrap(), expect_b, epsilon = 1e-12);
            assert_abs_diff_eq!(
                expectation_intercept(t, &p, &cm, &q).unwrap(),
                2.0 * expect_b,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn terminal_values() {
        let vf = ValueFunctions::new(ex1(), ex2_claims(), QuadSettings::default());
        assert_eq!(vf.value_intercept(9.0).unwrap(), 0.0);
        assert_eq!(vf.expectation_intercept(9.0).unwrap(), 0.0);
        for x in [-5.0, 0.0, 3.7] {
            let pt = vf.evaluate(x, 9.0).unwrap();
            assert_eq!(pt.value, x);
            assert_eq!(pt.expectation, x);
            assert_eq!(pt.variance, 0.0);
        }
    }

    #[test]
    fn value_is_affine_in_surplus() {
        let vf = ValueFunctions::new(ex1(), ex2_claims(), QuadSettings::default());
        let t = 2.0;
        let d = vf.value(10.0, t).unwrap() - vf.value(0.0, t).unwrap();
        assert_abs_diff_eq!(d, 10.0 * vf.params.growth(t), epsilon = 1e-12);
    }

    #[test]
    fn variance_gap_derivative() {
        // d/dt (b - B) = -(1/(2γ)) sharpe² - (γ/2) a² ((1-ρ²)σ₁² + ∫ℓ*²ν)
        let vf = ValueFunctions::new(ex1(), ex2_claims(), QuadSettings::default());
        let p = vf.params;
        let h = 1e-3;
        for t in [0.5, 3.0, 7.0] {
            let gap = |s: f64| vf.expectation_intercept(s).unwrap() - vf.value_intercept(s).unwrap();
            let fd = (gap(t + h) - gap(t - h)) / (2.0 * h);
            let a = p.growth(t);
            let m = p.eta / p.gamma / a;
            let expected = -(p.sharpe_sq() / (2.0 * p.gamma)
                + 0.5 * p.gamma * a * a
                    * ((1.0 - p.rho * p.rho) * p.sigma1 * p.sigma1
                        + 2.0 * vf.claims.partial_tail_moment(m)));
            assert_abs_diff_eq!(fd, expected, epsilon = 1e-6);
            assert!(gap(t) > 0.0);
        }
    }

    #[test]
    fn point_mass_kink_is_split() {
        let p = ex1();
        let cm = ClaimMeasure::new(1.5, Severity::point_mass(0.5)).unwrap();
        let crossings = deductible_crossings(&p, &cm, 0.0, 9.0);
        assert_eq!(crossings.len(), 1);
        assert_abs_diff_eq!(deductible_unchecked(crossings[0], &p), 0.5, epsilon = 1e-12);
        // Closed-form B for a point mass: integrate the two smooth pieces
        // separately at a much tighter tolerance.
        let tight = QuadSettings { abs_tol: 1e-13, max_depth: 50 };
        let s = crossings[0];
        let expect = quadrature::integrate(|u| value_integrand(u, &p, &cm), 0.0, s, &tight).unwrap()
            + quadrature::integrate(|u| value_integrand(u, &p, &cm), s, 9.0, &tight).unwrap();
        let got = value_intercept(0.0, &p, &cm, &QuadSettings::default()).unwrap();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-10);
    }

    #[test]
    fn table_interpolates_direct_quadrature() {
        let vf = ValueFunctions::new(ex1(), ex2_claims(), QuadSettings::default());
        let table = vf.tabulate(DEFAULT_TABLE_POINTS).unwrap();
        assert_eq!(table.len(), 512);
        for t in [0.0, 0.0123, 1.7, 4.5, 8.99, 9.0] {
            assert_abs_diff_eq!(
                table.value_intercept(t),
                vf.value_intercept(t).unwrap(),
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                table.expectation_intercept(t),
                vf.expectation_intercept(t).unwrap(),
                epsilon = 1e-9
            );
        }
    }
}

//! Reinsurance-investment strategies in feedback form `(ℓ(z, t), π(t))`.
//!
//! Retentions never depend on the surplus. Every schedule is a
//! deterministic function of time, so the controlled surplus has
//! state-independent coefficients apart from the linear `rX` term.

use serde::{Deserialize, Serialize};

use super::claims::ClaimMeasure;
use crate::error::{Error, Result};

/// Deterministic time schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { value: f64 },
    /// `min(cap, level * e^{-rate (horizon - t)} + offset)`
    Discounted {
        level: f64,
        rate: f64,
        horizon: f64,
        offset: f64,
        cap: f64,
    },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn discounted(level: f64, rate: f64, horizon: f64) -> Self {
        Schedule::Discounted {
            level,
            rate,
            horizon,
            offset: 0.0,
            cap: f64::INFINITY,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::Discounted {
                level,
                rate,
                horizon,
                offset,
                cap,
            } => (level * (-rate * (horizon - t)).exp() + offset).min(cap),
        }
    }

    /// Range of values over `[a, b]`; every schedule here is monotone.
    fn range(&self, a: f64, b: f64) -> (f64, f64) {
        let (x, y) = (self.at(a), self.at(b));
        (x.min(y), x.max(y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Retention {
    /// Retain `min(z, m(t))`.
    ExcessLoss { deductible: Schedule },
    /// Retain `q(t) * z`.
    Proportional { fraction: Schedule },
    /// No reinsurance.
    Full,
}

impl Retention {
    pub fn excess_loss(deductible: Schedule) -> Self {
        Retention::ExcessLoss { deductible }
    }

    pub fn proportional(fraction: Schedule) -> Self {
        Retention::Proportional { fraction }
    }

    /// Cede everything.
    pub fn zero() -> Self {
        Retention::Proportional {
            fraction: Schedule::constant(0.0),
        }
    }

    #[inline]
    pub fn retained(&self, z: f64, t: f64) -> f64 {
        match self {
            Retention::ExcessLoss { deductible } => z.min(deductible.at(t)),
            Retention::Proportional { fraction } => fraction.at(t) * z,
            Retention::Full => z,
        }
    }

    /// `∫ ℓ(z, t) nu(dz)` in closed form.
    pub fn expected_retained(&self, cm: &ClaimMeasure, t: f64) -> f64 {
        match self {
            Retention::ExcessLoss { deductible } => cm.partial_survival_integral(deductible.at(t)),
            Retention::Proportional { fraction } => fraction.at(t) * cm.mean(),
            Retention::Full => cm.mean(),
        }
    }

    /// `∫ ℓ(z, t)^2 nu(dz)` in closed form.
    pub fn expected_retained_sq(&self, cm: &ClaimMeasure, t: f64) -> f64 {
        match self {
            Retention::ExcessLoss { deductible } => {
                2.0 * cm.partial_tail_moment(deductible.at(t))
            }
            Retention::Proportional { fraction } => {
                let q = fraction.at(t);
                q * q * cm.second_moment()
            }
            Retention::Full => cm.second_moment(),
        }
    }

    /// Claim sizes at which `z ↦ ℓ(z, t)` is not smooth.
    pub fn kinks(&self, t: f64) -> Vec<f64> {
        match self {
            Retention::ExcessLoss { deductible } => vec![deductible.at(t)],
            _ => Vec::new(),
        }
    }

    fn validate_on(&self, a: f64, b: f64) -> Result<()> {
        match self {
            Retention::ExcessLoss { deductible } => {
                let (lo, _) = deductible.range(a, b);
                if !(lo >= 0.0) {
                    return Err(Error::InvalidStrategy(format!(
                        "deductible {lo} < 0 on [{a}, {b}]"
                    )));
                }
            }
            Retention::Proportional { fraction } => {
                let (lo, hi) = fraction.range(a, b);
                if !(lo >= 0.0 && hi <= 1.0) {
                    return Err(Error::InvalidStrategy(format!(
                        "fraction outside [0, 1] on [{a}, {b}]: [{lo}, {hi}]"
                    )));
                }
            }
            Retention::Full => {}
        }
        Ok(())
    }
}

/// Deviation `(ℓ̄, π̄)` applied on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub start: f64,
    pub end: f64,
    pub retention: Retention,
    pub investment: Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub retention: Retention,
    pub investment: Schedule,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spike: Option<Spike>,
}

impl Strategy {
    pub fn new(retention: Retention, investment: Schedule, horizon: f64) -> Self {
        Self {
            retention,
            investment,
            horizon,
            spike: None,
        }
    }

    /// Replaces the strategy by `(retention, investment)` on `[start, end)`.
    pub fn with_spike(
        mut self,
        start: f64,
        end: f64,
        retention: Retention,
        investment: Schedule,
    ) -> Self {
        self.spike = Some(Spike {
            start,
            end,
            retention,
            investment,
        });
        self
    }

    /// The rule in force at time `t`.
    #[inline]
    pub fn active(&self, t: f64) -> (&Retention, &Schedule) {
        match &self.spike {
            Some(s) if t >= s.start && t < s.end => (&s.retention, &s.investment),
            _ => (&self.retention, &self.investment),
        }
    }

    pub fn investment_at(&self, t: f64) -> f64 {
        self.active(t).1.at(t)
    }

    /// `ℓ(z, t)`, checked against `[0, T]`.
    pub fn retained_claim(&self, z: f64, t: f64) -> Result<f64> {
        if !(t.is_finite() && (0.0..=self.horizon).contains(&t)) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        if !(z >= 0.0) {
            return Err(Error::InvalidStrategy(format!("claim size {z} < 0")));
        }
        Ok(self.active(t).0.retained(z, t))
    }

    /// Times inside `(t0, T)` where the rule switches.
    pub fn breakpoints(&self, t0: f64) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(s) = &self.spike {
            for x in [s.start, s.end] {
                if x > t0 && x < self.horizon {
                    v.push(x);
                }
            }
        }
        v
    }

    /// Admissibility on `[t0, T]`: `0 <= ℓ <= z` and finite investment.
    pub fn validate(&self, t0: f64) -> Result<()> {
        let t_end = self.horizon;
        match &self.spike {
            None => self.retention.validate_on(t0, t_end)?,
            Some(s) => {
                if !(s.start < s.end) {
                    return Err(Error::InvalidStrategy(format!(
                        "empty spike window [{}, {})",
                        s.start, s.end
                    )));
                }
                self.retention.validate_on(t0, t_end)?;
                s.retention
                    .validate_on(s.start.max(t0), s.end.min(t_end))?;
                if !s.investment.at(s.start).is_finite() {
                    return Err(Error::InvalidStrategy("non-finite investment".into()));
                }
            }
        }
        if !(self.investment.at(t0).is_finite() && self.investment.at(t_end).is_finite()) {
            return Err(Error::InvalidStrategy("non-finite investment".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::claims::Severity;
    use crate::quadrature::QuadSettings;
    use proptest::prelude::*;
    use super::Strategy;

    fn strategies() -> Vec<Strategy> {
        let h = 9.0;
        let pi = Schedule::constant(0.3);
        vec![
            Strategy::new(Retention::excess_loss(Schedule::constant(0.6)), pi, h),
            Strategy::new(Retention::excess_loss(Schedule::discounted(0.6, 0.05, h)), pi, h),
            Strategy::new(Retention::proportional(Schedule::constant(0.3)), pi, h),
            Strategy::new(Retention::Full, pi, h),
            Strategy::new(Retention::zero(), pi, h),
            Strategy::new(Retention::Full, pi, h).with_spike(
                1.0,
                2.0,
                Retention::proportional(Schedule::constant(0.5)),
                Schedule::constant(0.0),
            ),
        ]
    }

    #[test]
    fn retained_claim_examples() {
        let pi = Schedule::constant(0.0);
        let xl = Strategy::new(Retention::excess_loss(Schedule::constant(0.6)), pi, 9.0);
        assert_eq!(xl.retained_claim(0.3, 1.0).unwrap(), 0.3);
        assert_eq!(xl.retained_claim(2.0, 1.0).unwrap(), 0.6);
        let qs = Strategy::new(Retention::proportional(Schedule::constant(0.3)), pi, 9.0);
        assert!((qs.retained_claim(2.0, 1.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(xl.retained_claim(1.0, 9.5).is_err());
        assert!(xl.retained_claim(1.0, -0.1).is_err());
    }

    #[test]
    fn spike_window_is_half_open() {
        let s = &strategies()[5];
        assert_eq!(s.retained_claim(2.0, 0.99).unwrap(), 2.0);
        assert_eq!(s.retained_claim(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(s.retained_claim(2.0, 2.0).unwrap(), 2.0);
        assert_eq!(s.breakpoints(0.0), vec![1.0, 2.0]);
        assert_eq!(s.breakpoints(1.5), vec![2.0]);
    }

    #[test]
    fn inadmissible_retentions_rejected() {
        let pi = Schedule::constant(0.0);
        let bad_q = Strategy::new(Retention::proportional(Schedule::constant(1.2)), pi, 1.0);
        assert!(bad_q.validate(0.0).is_err());
        let bad_m = Strategy::new(Retention::excess_loss(Schedule::constant(-0.1)), pi, 1.0);
        assert!(bad_m.validate(0.0).is_err());
        for s in strategies() {
            s.validate(0.0).unwrap();
        }
    }

    #[test]
    fn closed_form_retained_moments_match_direct_integration() {
        let q = QuadSettings::default();
        let measures = [
            ClaimMeasure::new(1.0, Severity::exponential(0.5)).unwrap(),
            ClaimMeasure::new(2.0, Severity::point_mass(0.4)).unwrap(),
            ClaimMeasure::new(0.7, Severity::empirical(vec![0.1, 0.5, 2.0, 3.5]).unwrap()).unwrap(),
        ];
        for cm in &measures {
            for s in strategies() {
                for t in [0.0, 1.5, 4.0, 9.0] {
                    let (ret, _) = s.active(t);
                    let k = ret.kinks(t);
                    let direct = cm.integrate(|z| ret.retained(z, t), &k, &q).unwrap();
                    let direct2 = cm.integrate(|z| ret.retained(z, t).powi(2), &k, &q).unwrap();
                    assert!((direct - ret.expected_retained(cm, t)).abs() < 1e-9);
                    assert!((direct2 - ret.expected_retained_sq(cm, t)).abs() < 1e-9);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn retention_is_admissible(z in 0.0f64..50.0, t in 0.0f64..9.0) {
            for s in strategies() {
                let l = s.retained_claim(z, t).unwrap();
                prop_assert!(l >= 0.0 && l <= z, "{:?} gave {} for z = {}", s, l, z);
            }
        }
    }
}

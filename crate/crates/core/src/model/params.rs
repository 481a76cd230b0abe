use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Market, insurance and preference parameters.
///
/// `sigma1` is the diffusion volatility of the basic surplus and may be
/// zero (pure Cramér–Lundberg); `sigma2` is the risky-asset volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub r: f64,
    pub mu: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Warning {
    /// Reinsurance is no more expensive than the primary insurance (`eta <= theta`).
    CheapReinsurance,
}

impl ModelParams {
    /// Parameters of the strategy-sensitivity example.
    ///
    /// The example fixes only the strategy-relevant parameters; `theta` is
    /// set to 0.5 so that value functions are defined.
    pub fn example1() -> Self {
        Self {
            r: 0.05,
            mu: 0.10,
            sigma1: 0.20,
            sigma2: 0.30,
            rho: 0.50,
            theta: 0.50,
            eta: 0.60,
            gamma: 1.0,
            horizon: 9.0,
        }
    }

    /// Parameters of the Cramér–Lundberg comparison example.
    pub fn example2() -> Self {
        Self {
            r: 0.05,
            mu: 0.10,
            sigma1: 0.0,
            sigma2: 0.30,
            rho: 0.0,
            theta: 0.50,
            eta: 0.60,
            gamma: 0.50,
            horizon: 3.0,
        }
    }

    /// Returns every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                v.push(Violation::new(field, msg));
            }
        };
        let fin = |x: f64| x.is_finite();
        check(fin(self.r) && self.r > 0.0, "r", "must be > 0");
        check(fin(self.mu) && self.mu > self.r, "mu", "must be > r");
        check(fin(self.sigma1) && self.sigma1 >= 0.0, "sigma1", "must be >= 0");
        check(fin(self.sigma2) && self.sigma2 > 0.0, "sigma2", "must be > 0");
        check(
            fin(self.rho) && self.rho > -1.0 && self.rho < 1.0,
            "rho",
            "must lie in the open interval (-1, 1)",
        );
        check(fin(self.theta) && self.theta > 0.0, "theta", "must be > 0");
        check(fin(self.eta) && self.eta > 0.0, "eta", "must be > 0");
        check(fin(self.gamma) && self.gamma > 0.0, "gamma", "must be > 0");
        check(fin(self.horizon) && self.horizon > 0.0, "T", "must be > 0");
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

    pub fn warnings(&self) -> Vec<Warning> {
        let mut w = Vec::new();
        if self.eta <= self.theta {
            w.push(Warning::CheapReinsurance);
        }
        w
    }

    /// Accumulation factor `e^{r(T-t)}`.
    #[inline]
    pub fn growth(&self, t: f64) -> f64 {
        (self.r * (self.horizon - t)).exp()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            })
        }
    }

    /// Squared market price of risk `((mu - r) / sigma2)^2`.
    #[inline]
    pub fn sharpe_sq(&self) -> f64 {
        let s = (self.mu - self.r) / self.sigma2;
        s * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_are_valid() {
        ModelParams::example1().validate().unwrap();
        ModelParams::example2().validate().unwrap();
        assert!(ModelParams::example1().warnings().is_empty());
    }

    #[test]
    fn collects_every_violation() {
        let p = ModelParams {
            rho: 1.0,
            gamma: 0.0,
            mu: 0.01,
            ..ModelParams::example1()
        };
        let fields: Vec<_> = p.violations().into_iter().map(|v| v.field).collect();
        assert_eq!(fields, vec!["mu", "rho", "gamma"]);
    }

    #[test]
    fn zero_sigma1_is_admitted() {
        let p = ModelParams {
            sigma1: 0.0,
            ..ModelParams::example1()
        };
        p.validate().unwrap();
    }

    #[test]
    fn cheap_reinsurance_is_a_warning_only() {
        let p = ModelParams {
            eta: 0.4,
            ..ModelParams::example1()
        };
        p.validate().unwrap();
        assert_eq!(p.warnings(), vec![Warning::CheapReinsurance]);
    }

    #[test]
    fn time_range() {
        let p = ModelParams::example1();
        p.check_time(0.0).unwrap();
        p.check_time(9.0).unwrap();
        assert!(p.check_time(-1e-12).is_err());
        assert!(p.check_time(9.000001).is_err());
        assert!(p.check_time(f64::NAN).is_err());
    }
}

//! Adaptive Simpson quadrature.
//!
//! The recursion splits the global absolute tolerance in half at every
//! level and applies the Richardson correction `(S2 - S1) / 15` on
//! acceptance. Intervals may be pre-split at caller-supplied breakpoints
//! (kinks of the integrand), which is where piecewise-smooth integrands
//! lose Simpson's fifth-order accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_depth: 40,
        }
    }
}

/// Refinement levels forced before the error estimate is trusted, so that
/// a sharply peaked integrand cannot slip between the first few nodes.
const MIN_DEPTH: u32 = 5;

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, fa: f64, fm: f64, b: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    seg: Segment,
    tol: f64,
    depth: u32,
    settings: &QuadSettings,
) -> Result<f64> {
    let Segment { a, b, fa, fm, fb, whole } = seg;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, flm, m, fm);
    let right = simpson(m, fm, frm, b, fb);
    let delta = left + right - whole;

    // Below this the difference is rounding noise, not truncation error.
    let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth >= MIN_DEPTH && (delta.abs() <= 15.0 * tol || delta.abs() <= noise) {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= settings.max_depth || !delta.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            tol,
            depth,
        });
    }
    let half = 0.5 * tol;
    let l = recurse(
        f,
        Segment { a, b: m, fa, fm: flm, fb: fm, whole: left },
        half,
        depth + 1,
        settings,
    )?;
    let r = recurse(
        f,
        Segment { a: m, b, fa: fm, fm: frm, fb, whole: right },
        half,
        depth + 1,
        settings,
    )?;
    Ok(l + r)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: &QuadSettings) -> Result<f64> {
    integrate_split(f, a, b, &[], settings)
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint strictly
/// inside the interval. The tolerance is shared evenly between pieces.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    settings: &QuadSettings,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut nodes: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    nodes.sort_by(|x, y| x.total_cmp(y));
    nodes.dedup();
    nodes.insert(0, lo);
    nodes.push(hi);

    let tol = settings.abs_tol / (nodes.len() - 1) as f64;
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = simpson(a, fa, fm, b, fb);
        total += recurse(&f, Segment { a, b, fa, fm, fb, whole }, tol, 0, settings)?;
    }
    Ok(sign * total)
}

//! Time-consistent mean-variance reinsurance and investment for an insurer
//! with a diffusion-perturbed compound Poisson surplus.
//!
//! The crate provides the closed-form equilibrium strategy and value
//! functions, the infinitesimal generator with an extended-HJB verifier,
//! a Monte Carlo simulator for arbitrary feedback strategies, and the
//! excess-of-loss versus proportional comparison.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod compare;
pub mod equilibrium;
pub mod error;
pub mod generator;
pub mod model;
pub mod quadrature;
pub mod simulate;
pub mod table;

pub use error::{Error, Result};

/// Order-preserving map, parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

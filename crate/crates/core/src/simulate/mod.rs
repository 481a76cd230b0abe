//! Monte Carlo simulation of the controlled surplus, objective estimates,
//! and the perturbation test of the equilibrium condition.

pub mod engine;
pub mod estimate;
pub mod perturb;
pub mod rng;

use std::io::Write;

pub use engine::{
    simulate_coupled, simulate_coupled_observed, simulate_observed, simulate_terminal, SimConfig,
    BLOWUP_LIMIT,
};
pub use estimate::{estimate_objective, pairwise_sum, paired_objective_difference, MCEstimate};
pub use perturb::{
    perturbation_library, perturbation_test, Perturbation, PerturbationReport, PerturbationResult,
    RatioEstimate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// Little-endian `f64`, no header.
    Binary,
    /// Header `x_T`, one shortest round-trip value per line.
    Csv,
}

pub fn write_samples<W: Write>(mut w: W, samples: &[f64], format: SampleFormat) -> crate::Result<()> {
    match format {
        SampleFormat::Binary => {
            for x in samples {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        SampleFormat::Csv => {
            writeln!(w, "x_T")?;
            for x in samples {
                writeln!(w, "{x}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_binary(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect()
}

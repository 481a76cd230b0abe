use std::fmt;

use thiserror::Error;

/// A single violated invariant, reported against the field that broke it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("time {t} is outside the horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e} within depth {depth}")]
    Quadrature { a: f64, b: f64, tol: f64, depth: u32 },

    #[error("claim severity has zero second moment")]
    ZeroSecondMoment,

    #[error("unsupported function: {0}")]
    Unsupported(String),

    #[error("generic generator {generic} and separable shortcut {shortcut} disagree")]
    GeneratorMismatch { generic: f64, shortcut: f64 },

    #[error("negative variance {0} (g < V)")]
    NegativeVariance(f64),

    #[error("inadmissible strategy: {0}")]
    InvalidStrategy(String),

    #[error("surplus blew up to {value} at t = {t} on path {path}")]
    Blowup { value: f64, t: f64, path: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("perturbation window infeasible: {0}")]
    InfeasibleEpsilon(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by measure construction, potential evaluation, transport
/// solvers, flow drivers, and the generators.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// A point, frame vector, or matrix does not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Measures need at least one atom.
    #[error("empty input: at least one atom is required")]
    EmptyMeasure,

    /// Input contained NaN or an infinity where a finite value is required.
    #[error("non-finite input in {0}")]
    NonFiniteInput(&'static str),

    /// Weights must be nonnegative.
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    /// Weight vectors are renormalized only when their sum is already within
    /// 1e-6 of 1; anything further off is treated as a caller bug.
    #[error("weight sum {sum} out of range (must be within 1e-6 of 1)")]
    WeightSumOutOfRange { sum: f64 },

    /// Moment and transport-cost exponents must satisfy p >= 1.
    #[error("invalid exponent {p} (need finite p >= 1)")]
    InvalidExponent { p: f64 },

    /// p-frame quantities are defined here for even integer p >= 2.
    #[error("exponent {p} is not an even integer >= 2")]
    OddExponent { p: u32 },

    /// Entropic regularization must be strictly positive and finite.
    #[error("invalid regularization {reg} (must be finite and > 0)")]
    InvalidRegularization { reg: f64 },

    /// The entropic solver failed to meet the marginal tolerance.
    #[error(
        "entropic solver did not converge after {iterations} iterations \
         (marginal violation {violation:.3e})"
    )]
    NonConvergence { iterations: usize, violation: f64 },

    /// The exact solver exceeded its pivot budget. This indicates a bug in
    /// the solver rather than bad input, so it is surfaced loudly.
    #[error("transport solver failure: {0}")]
    SolverFailure(String),

    /// A flow step produced a non-finite coordinate (step size too large).
    #[error("non-finite coordinate at step {step} (reduce the step size)")]
    NonFinite { step: usize },

    /// Trajectory index out of range (or an empty/invalid index pair).
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// A check or operation was invoked on inputs outside its hypothesis.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// Rejection sampling exhausted its attempt budget.
    #[error("generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed CSV, config, or witness content.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

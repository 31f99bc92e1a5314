use thiserror::Error;

use crate::regression::ModelIndex;

/// Errors produced across the library.
///
/// The CLI maps each variant onto an exit code through [`Error::exit_code`]:
/// input and configuration problems exit with 2, degenerate data with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("degenerate design: columns of model {model} are numerically rank deficient (rank {rank} < {required})")]
    DegenerateDesign {
        model: ModelIndex,
        rank: usize,
        required: usize,
    },

    #[error("degenerate response: the response vector is constant")]
    DegenerateResponse,

    #[error("saturated fit: 1 - R^2 = {one_minus_r2:e} (p(alpha) = {p_alpha}) is below the saturation floor")]
    SaturatedFit { p_alpha: usize, one_minus_r2: f64 },

    #[error("quadrature failed to converge (partial log estimate {partial_log:.6}, log-scale error {abs_err:e})")]
    QuadratureFailure { partial_log: f64, abs_err: f64 },

    #[error("integral diverges: integrand still increasing at log g = {at:.1}")]
    Divergent { at: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("model space too large: p = {p} exceeds the enumeration limit {max_p}; use gibbs search")]
    SpaceTooLarge { p: usize, max_p: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model-false design invalid: true mean lies in the span of the candidate regressors (min D_n = {min_d:e})")]
    ModelFalseDesign { min_d: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateDesign { .. }
            | Error::DegenerateResponse
            | Error::SaturatedFit { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

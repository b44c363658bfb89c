use thiserror::Error;

/// Errors raised by game construction, solvers and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error(
        "fixed-point iteration is cycling: residual stagnated at {residual:e} for {stagnant_steps} steps; \
         the equilibrium is likely unstable under damped smoothed best response"
    )]
    Cycling { residual: f64, stagnant_steps: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("at beta = {beta}: {source}")]
    AtBeta {
        beta: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any `AtBeta` annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtBeta { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the analysis, estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or argument falls outside the domain where the quantity is defined.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain { name: &'static str, value: f64, reason: &'static str },

    /// A ratio whose denominator moment vanishes.
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),

    /// The selected p-values contain nothing at or below alpha.
    #[error("no selected p-values at or below alpha = {alpha}")]
    NoDiscoveries { alpha: f64 },

    #[error("invalid selection model: {0}")]
    InvalidSpm(String),

    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels (error estimate {error:e})")]
    NonConvergence { tol: f64, panels: usize, error: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { name, value, reason: "must lie in [0, 1]" })
    }
}

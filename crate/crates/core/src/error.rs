use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical engine.
///
/// `Domain` covers arguments outside the mathematical domain of an operation,
/// `Config` covers sampling/grid choices that make a computation untrustworthy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("band limit violated: |kx| = {kx} must be below k0 = {k0}")]
    BandLimit { kx: f64, k0: f64 },

    #[error("evanescent occupancy {fraction:e} exceeds threshold {threshold:e}")]
    Evanescent { fraction: f64, threshold: f64 },

    #[error("aliasing risk: spectral power fraction {fraction:e} above 0.9 k_nyq exceeds {threshold:e}")]
    Aliasing { fraction: f64, threshold: f64 },

    #[error("no real branch: 1 + 2 eps E = {0} < 0")]
    NoRealBranch(f64),

    #[error("quadrature did not converge: last doubling changed the result by {change:e} (tol {tol:e})")]
    NonConvergence { change: f64, tol: f64 },

    #[error("mode not admissible for loop integral: {0}")]
    Inadmissible(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An exponential norm weight left the finite f64 range. The shell
    /// index refers to the profile's canonical order.
    #[error("weight overflow at shell {shell}: exp({exponent}) is not finite")]
    WeightOverflow { shell: usize, exponent: f64 },

    #[error("invalid radial grid: {0}")]
    InvalidRadialGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("trivial data")]
    TrivialData,

    /// The Gevrey bound needs `eta > 2M/nu0`; below that the bound is
    /// simply not defined (this is not a numerical failure).
    #[error("eta below Gevrey threshold: eta = {eta} must exceed 2M/nu0 = {threshold}")]
    EtaBelowThreshold { eta: f64, threshold: f64 },

    #[error("eta inadmissible for the energy certificate: eta = {eta} must exceed {required}")]
    EtaInadmissible { eta: f64, required: f64 },

    #[error("horizon mismatch: path ends at {path_horizon}, expected {expected}")]
    HorizonMismatch { path_horizon: f64, expected: f64 },

    #[error("step exceeds oscillation resolution: step = {step}, max stable step = {max_step}")]
    StepTooLarge { step: f64, max_step: f64 },

    #[error("numerical divergence at t = {t}")]
    NumericalDivergence { t: f64 },

    #[error("coefficient path outside the admissible class: violation {worst_violation:e} at t = {location}")]
    NotInClassK { worst_violation: f64, location: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

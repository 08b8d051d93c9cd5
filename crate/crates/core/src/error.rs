use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate drive: cavity decay and laser detuning are both zero")]
    DegenerateDrive,

    #[error("overdamped regime: loss asymmetry Γ = {gamma} has Γ² ≥ 1, swap time undefined")]
    Overdamped { gamma: f64 },

    #[error("area deviation {deviation} leaves a non-positive interaction area (current area {area})")]
    NonPositiveArea { deviation: f64, area: f64 },

    #[error("no real optimal phase for Γ = {gamma}")]
    NoRealSolution { gamma: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("quadrature did not reach tolerance (estimated error {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("time {t} is outside the sequence span [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("could not draw valid parameters after {retries} retries")]
    Sampling { retries: usize },

    #[error("Fock cutoff too small: leakage {leakage:.3e} exceeds {threshold:.1e}")]
    CutoffTooSmall { leakage: f64, threshold: f64 },

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("adjacent phase bumps overlap by {overlap:.3e} (limit {limit:.1e})")]
    Overlap { overlap: f64, limit: f64 },

    #[error("amplitude calibration failed: {0}")]
    Calibration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical method rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Quadrature { .. }
                | Error::Integrator { .. }
                | Error::CutoffTooSmall { .. }
                | Error::Sampling { .. }
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

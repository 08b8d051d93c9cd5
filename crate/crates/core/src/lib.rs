//! Composite phase-driving sequences for robust photon–phonon state transfer
//! in lossy, red-detuned cavity optomechanics.

pub mod error;
pub mod evolution;
pub mod export;
pub mod lindblad;
pub mod montecarlo;
mod ode;
pub mod optimizer;
pub mod params;
pub mod quadrature;
pub mod semiclassical;

pub use error::{Error, Result};
pub use evolution::{MeanNumbers, NoiseAccumulator, PhaseSequence, Segment, TransferMatrix};
pub use params::{derive, DerivedParams, Drive, SystemParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

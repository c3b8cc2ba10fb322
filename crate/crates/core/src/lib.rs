//! Monte Carlo estimation of Lyapunov spectra of flat bundles over hyperbolic
//! surfaces, with the linear-algebra and harmonic-measure checks around them.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub mod brownian;
pub mod cocycle;
pub mod lyapunov;
pub mod grassmann;
pub mod harmonic;
pub mod harness;

pub use brownian::{PathConfig, TrajectorySummary};
pub use cocycle::{transport, CocycleProduct, PreservedForm, RepFlags, Representation};
pub use geometry::{HPoint, Letter, Mobius, SurfaceModel, Word};
pub use linalg::{CMat, CVec};
pub use lyapunov::{estimate_spectrum, estimate_top, EstimatorConfig, SpectrumEstimate, TopEstimate};
pub use stats::Estimate;

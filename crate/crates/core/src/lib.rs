//! Photon statistics and phase-covariance estimation for a pair of
//! interferometers fed with coherent light plus twin-beam or squeezed light.

pub mod error;
pub mod estimation;
pub mod fock;
pub mod gaussian;
pub mod holometer;
pub mod moments;
pub mod observables;
pub mod phase_noise;
pub mod sweep;

pub use error::{Error, Result};
pub use holometer::{HolometerConfig, InputKind};
pub use moments::ReadoutMoments;

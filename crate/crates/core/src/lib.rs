//! Heralded photonic entangled-state simulation on a Gaussian backend.
//!
//! Photon sources are two-mode squeezers whose signal modes are heralded;
//! idlers pass through a (dilated) interferometer and the heralded logical
//! state is read out through loop hafnians of the Gaussian moments.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod hafnian;
pub mod linalg;
pub mod sources;
pub mod circuits;
pub mod tomography;
pub mod schur;
pub mod experiments;
pub mod oracle;

pub use error::{Error, Result};

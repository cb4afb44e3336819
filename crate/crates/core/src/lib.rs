//! Gaussian-state simulation of arrays of coupled nonlinear waveguides:
//! propagation, homodyne measurement, entanglement certification and
//! evolution-strategy synthesis of pump and detection profiles.

pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod model;
pub mod optimizer;

pub use error::{Error, Result};

//! Coupled-mode model of an array of `N` evanescently coupled waveguides with
//! a per-waveguide pump. Lengths are in mm and rates in mm^-1.
//!
//! In the individual basis the annihilation operators obey
//! `dA/dz = i K A + 2 i diag(eta) A^dagger`, where `K` is tridiagonal with
//! off-diagonals `C_0 f_j`.

mod ode;
mod propagate;
mod supermodes;

pub use ode::{propagator_rk4, RK4_STEP};
pub use propagate::{
    flat_pump_analytic, flat_pump_propagator, generator, nonlinear_supermodes, propagator_exact,
    propagator_no_ordering, FlatPumpBlock, NonlinearSupermodes,
};
pub use supermodes::{
    coupling_matrix_l, integrated_l, linear_supermodes, LinearSupermodes, ZERO_DETUNING,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{block_diag2, RealMatrix, SymplecticMatrix};
use crate::{Error, Result};

/// Geometry of the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n: usize,
    /// `C_0`, mm^-1.
    pub coupling_strength: f64,
    /// `f_1 .. f_{N-1}`; `f_0 = f_N = 0`.
    pub coupling_profile: Vec<f64>,
    /// mm.
    pub length: f64,
}

impl ArrayConfig {
    /// Homogeneous coupling `f_j = 1`.
    pub fn homogeneous(n: usize, coupling_strength: f64, length: f64) -> Self {
        Self {
            n,
            coupling_strength,
            coupling_profile: vec![1.0; n.saturating_sub(1)],
            length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig(
                "array needs at least one waveguide".into(),
            ));
        }
        if self.coupling_profile.len() != self.n - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n - 1,
                got: self.coupling_profile.len(),
            });
        }
        if !(self.coupling_strength.is_finite() && self.coupling_strength >= 0.0) {
            return Err(Error::InvalidConfig(
                "coupling strength must be finite and >= 0".into(),
            ));
        }
        if self
            .coupling_profile
            .iter()
            .any(|f| !(f.is_finite() && *f >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "coupling profile must be finite and >= 0".into(),
            ));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidConfig("length must be positive".into()));
        }
        Ok(())
    }

    /// Tridiagonal coupling matrix `K`.
    pub fn coupling_matrix(&self) -> RealMatrix {
        let mut k = RealMatrix::zeros(self.n, self.n);
        for (j, f) in self.coupling_profile.iter().enumerate() {
            k[(j, j + 1)] = self.coupling_strength * f;
            k[(j + 1, j)] = self.coupling_strength * f;
        }
        k
    }
}

/// Pump strengths `eta_j = |eta_j| e^{i phi_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpProfile {
    /// mm^-1.
    pub amplitudes: Vec<f64>,
    /// Radians.
    pub phases: Vec<f64>,
}

impl PumpProfile {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Self {
        Self { amplitudes, phases }
    }

    pub fn flat(n: usize, amplitude: f64, phase: f64) -> Self {
        Self {
            amplitudes: vec![amplitude; n],
            phases: vec![phase; n],
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::flat(n, 0.0, 0.0)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for len in [self.amplitudes.len(), self.phases.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if self
            .amplitudes
            .iter()
            .chain(&self.phases)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        if self.amplitudes.iter().any(|a| *a < 0.0) {
            return Err(Error::InvalidConfig("pump amplitudes must be >= 0".into()));
        }
        Ok(())
    }

    pub fn complex(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect()
    }
}

/// Mode basis a [`GaussianState`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Individual,
    LinearSupermode,
    NonlinearSupermode,
}

/// Zero-mean Gaussian state reached from vacuum by `propagator`.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub z: f64,
    pub propagator: SymplecticMatrix,
    /// `S S^T`; vacuum is the identity.
    pub covariance: RealMatrix,
    pub basis: Basis,
}

impl GaussianState {
    pub fn from_propagator(z: f64, propagator: SymplecticMatrix, basis: Basis) -> Self {
        let covariance = propagator.covariance();
        Self {
            z,
            propagator,
            covariance,
            basis,
        }
    }

    pub fn vacuum(n: usize, basis: Basis) -> Self {
        Self::from_propagator(0.0, SymplecticMatrix::identity(n), basis)
    }

    pub fn n_modes(&self) -> usize {
        self.propagator.n_modes()
    }

    /// Mean photon number `tr(V - I) / 4`.
    pub fn mean_photon_number(&self) -> f64 {
        (self.covariance.trace() - self.covariance.nrows() as f64) / 4.0
    }
}

/// Quadrature map from the individual basis to the linear-supermode basis,
/// `diag(M, M)`.
pub fn supermode_rotation(modes: &LinearSupermodes) -> SymplecticMatrix {
    SymplecticMatrix::new_unchecked(block_diag2(&modes.matrix))
}

fn check_inputs(cfg: &ArrayConfig, pump: &PumpProfile, z: f64) -> Result<()> {
    cfg.validate()?;
    pump.validate(cfg.n)?;
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "propagation distance must be >= 0, got {z}"
        )));
    }
    Ok(())
}

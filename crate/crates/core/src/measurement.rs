//! Homodyne detection on Gaussian states. Variances are in shot-noise units
//! (vacuum = 1). Mode indices are zero-based.
//!
//! The local-oscillator phase `theta` selects `x(theta) = cos theta x + sin theta y`
//! and `y(theta) = x(theta + pi/2)`.

use serde::{Deserialize, Serialize};

use crate::linalg::{d_lo, SymplecticMatrix};
use crate::model::{Basis, GaussianState};
use crate::{Error, Result};

/// LO phases and photocurrent gains for one detection setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub lo_phases: Vec<f64>,
    pub gains: Vec<f64>,
    pub basis: Basis,
}

impl MeasurementConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        for len in [self.lo_phases.len(), self.gains.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        Ok(())
    }
}

/// `sum_i c_i x_i(theta_i) + sum_i c_{N+i} y_i(theta_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCombination {
    pub coefficients: Vec<f64>,
    pub angles: Vec<f64>,
}

impl QuadratureCombination {
    pub fn new(coefficients: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if coefficients.len() != 2 * angles.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * angles.len(),
                got: coefficients.len(),
            });
        }
        if coefficients.iter().chain(&angles).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidConfig(
                "quadrature combination has no nonzero coefficient".into(),
            ));
        }
        Ok(Self {
            coefficients,
            angles,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.angles.len()
    }

    /// Coefficients on the unrotated `(x, y)` quadratures.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        let n = self.n_modes();
        let mut w = vec![0.0; 2 * n];
        for i in 0..n {
            let (s, c) = self.angles[i].sin_cos();
            let (cx, cy) = (self.coefficients[i], self.coefficients[n + i]);
            // x(t) = c x + s y, y(t) = -s x + c y
            w[i] = c * cx - s * cy;
            w[n + i] = s * cx + c * cy;
        }
        w
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.coefficients.iter_mut().for_each(|c| *c *= factor);
        self
    }
}

/// `V' = T V T^T`, `S' = T S`.
pub fn change_basis(
    state: &GaussianState,
    t: &SymplecticMatrix,
    basis: Basis,
) -> Result<GaussianState> {
    let checked = SymplecticMatrix::new(t.matrix().clone())?;
    if checked.n_modes() != state.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: state.n_modes(),
            got: checked.n_modes(),
        });
    }
    Ok(GaussianState::from_propagator(
        state.z,
        checked.compose(&state.propagator),
        basis,
    ))
}

fn check_mode(state: &GaussianState, mode: usize) -> Result<()> {
    if mode >= state.n_modes() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            len: state.n_modes(),
        });
    }
    Ok(())
}

/// `(V[x_i, x_i], V[x_i, y_i], V[y_i, y_i])`.
fn mode_block(state: &GaussianState, mode: usize) -> (f64, f64, f64) {
    let n = state.n_modes();
    let v = &state.covariance;
    (
        v[(mode, mode)],
        0.5 * (v[(mode, n + mode)] + v[(n + mode, mode)]),
        v[(n + mode, n + mode)],
    )
}

/// Variance of `x_i(theta)`.
pub fn variance_at(state: &GaussianState, mode: usize, theta: f64) -> Result<f64> {
    check_mode(state, mode)?;
    let (a, b, c) = mode_block(state, mode);
    let (s, co) = theta.sin_cos();
    Ok(a * co * co + 2.0 * b * s * co + c * s * s)
}

/// Smallest variance over LO phases and its angle in `(-pi/2, pi/2]`.
/// An isotropic mode reports angle 0.
pub fn min_variance(state: &GaussianState, mode: usize) -> Result<(f64, f64)> {
    check_mode(state, mode)?;
    let (a, b, c) = mode_block(state, mode);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let mean = 0.5 * (a + c);
    if radius <= 1e-12 * mean.abs().max(1.0) {
        return Ok((mean, 0.0));
    }
    // variance(t) = mean + half_diff cos 2t + b sin 2t
    let mut theta = 0.5 * (b.atan2(half_diff) + std::f64::consts::PI);
    if theta > std::f64::consts::FRAC_PI_2 {
        theta -= std::f64::consts::PI;
    }
    Ok((mean - radius, theta))
}

/// Largest variance over LO phases.
pub fn max_variance(state: &GaussianState, mode: usize) -> Result<f64> {
    check_mode(state, mode)?;
    let (a, b, c) = mode_block(state, mode);
    Ok(0.5 * (a + c) + (0.5 * (a - c)).hypot(b))
}

/// `c^T D_LO V D_LO^T c`.
pub fn combination_variance(state: &GaussianState, combo: &QuadratureCombination) -> Result<f64> {
    if combo.n_modes() != state.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: state.n_modes(),
            got: combo.n_modes(),
        });
    }
    let w = nalgebra::DVector::from_vec(combo.raw_coefficients());
    Ok(w.dot(&(&state.covariance * &w)))
}

/// Gradient of [`combination_variance`] with respect to the LO phases.
pub fn combination_angle_gradient(
    state: &GaussianState,
    combo: &QuadratureCombination,
) -> Result<Vec<f64>> {
    combination_variance(state, combo)?;
    let n = combo.n_modes();
    let w = nalgebra::DVector::from_vec(combo.raw_coefficients());
    let vw = &state.covariance * &w;
    Ok((0..n)
        .map(|i| {
            let (s, c) = combo.angles[i].sin_cos();
            let (cx, cy) = (combo.coefficients[i], combo.coefficients[n + i]);
            let dwx = -s * cx - c * cy;
            let dwy = c * cx - s * cy;
            2.0 * (dwx * vw[i] + dwy * vw[n + i])
        })
        .collect())
}

/// Gradient of [`combination_variance`] with respect to the coefficients.
pub fn combination_coefficient_gradient(
    state: &GaussianState,
    combo: &QuadratureCombination,
) -> Result<Vec<f64>> {
    combination_variance(state, combo)?;
    let d = d_lo(&combo.angles);
    let vr = d.matrix() * &state.covariance * d.matrix().transpose();
    let c = nalgebra::DVector::from_column_slice(&combo.coefficients);
    Ok((vr * c * 2.0).iter().copied().collect())
}

/// `V -> d_lo(theta) V d_lo(theta)^T`, the state seen through the LO phases.
pub fn rotate_lo(state: &GaussianState, theta: &[f64]) -> Result<GaussianState> {
    change_basis(state, &d_lo(theta), state.basis)
}

/// `10 log10(variance)`.
pub fn squeezing_db(variance: f64) -> Result<f64> {
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::NonPositiveVariance(variance));
    }
    Ok(10.0 * variance.log10())
}

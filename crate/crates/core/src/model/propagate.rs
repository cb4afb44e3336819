use num_complex::Complex64;

use super::{
    check_inputs, linear_supermodes, ArrayConfig, Basis, GaussianState, LinearSupermodes,
    PumpProfile,
};
use crate::linalg::{
    block_diag2, mat_exp, passive_from_unitary, quadrature_from_bogoliubov, symplectic_defect,
    symplectic_refine, takagi, ComplexMatrix, RealMatrix, SymplecticMatrix,
};
use crate::Result;

/// Real `2N x 2N` generator `Q` with `d(x, y)/dz = Q (x, y)`:
/// `Q = [[-2 B, -K + 2 A], [K + 2 A, 2 B]]`, `A = diag(|eta| cos phi)`,
/// `B = diag(|eta| sin phi)`.
pub fn generator(cfg: &ArrayConfig, pump: &PumpProfile) -> Result<RealMatrix> {
    check_inputs(cfg, pump, 0.0)?;
    let n = cfg.n;
    let k = cfg.coupling_matrix();
    let mut q = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            q[(i, n + j)] = -k[(i, j)];
            q[(n + i, j)] = k[(i, j)];
        }
        let (s, c) = pump.phases[i].sin_cos();
        let a = 2.0 * pump.amplitudes[i] * c;
        let b = 2.0 * pump.amplitudes[i] * s;
        q[(i, i)] = -b;
        q[(n + i, n + i)] = b;
        q[(i, n + i)] += a;
        q[(n + i, i)] += a;
    }
    Ok(q)
}

/// `S(z) = exp(Q z)` in the individual basis. Exact, since the coupled-mode
/// equations have constant coefficients.
pub fn propagator_exact(cfg: &ArrayConfig, pump: &PumpProfile, z: f64) -> Result<GaussianState> {
    check_inputs(cfg, pump, z)?;
    let q = generator(cfg, pump)? * z;
    let s = mat_exp(&q)?;
    Ok(GaussianState::from_propagator(
        z,
        polished(s),
        Basis::Individual,
    ))
}

const POLISH_THRESHOLD: f64 = 1e-12;

fn polished(s: RealMatrix) -> SymplecticMatrix {
    if symplectic_defect(&s) > POLISH_THRESHOLD {
        SymplecticMatrix::new_unchecked(symplectic_refine(&s))
    } else {
        SymplecticMatrix::new_unchecked(s)
    }
}

fn lab_frame_phases(modes: &LinearSupermodes, z: f64) -> SymplecticMatrix {
    let u = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        modes.n(),
        modes
            .eigenvalues
            .iter()
            .map(|l| Complex64::from_polar(1.0, l * z)),
    ));
    SymplecticMatrix::new_unchecked(passive_from_unitary(&u))
}

/// Propagator that neglects space ordering: the slowly varying supermode
/// amplitudes evolve by `exp([[0, W], [conj W, 0]])` with `W = int_0^z L`.
/// The result is returned in the linear-supermode basis (lab frame).
pub fn propagator_no_ordering(
    cfg: &ArrayConfig,
    pump: &PumpProfile,
    z: f64,
) -> Result<GaussianState> {
    check_inputs(cfg, pump, z)?;
    let modes = linear_supermodes(cfg)?;
    let w = super::integrated_l(cfg, pump, &modes, z)?;
    let n = cfg.n;
    let mut big = ComplexMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, n), (n, n)).copy_from(&w);
    big.view_mut((n, 0), (n, n)).copy_from(&w.conjugate());
    let e = mat_exp(&big)?;
    let p = e.view((0, 0), (n, n)).into_owned();
    let q = e.view((0, n), (n, n)).into_owned();
    let slow = SymplecticMatrix::new_unchecked(quadrature_from_bogoliubov(&p, &q));
    let s = lab_frame_phases(&modes, z).compose(&slow);
    Ok(GaussianState::from_propagator(
        z,
        polished(s.into_inner()),
        Basis::LinearSupermode,
    ))
}

/// Takagi modes of the integrated coupling: `upsilon W upsilon^T = diag(gains)`.
/// The combinations `C = upsilon B` of slowly varying supermode amplitudes
/// are independent single-mode squeezers with `x` anti-squeezed.
#[derive(Debug, Clone)]
pub struct NonlinearSupermodes {
    pub z: f64,
    pub upsilon: ComplexMatrix,
    /// Squeezing parameters `r_m`, descending.
    pub gains: Vec<f64>,
    pub modes: LinearSupermodes,
}

impl NonlinearSupermodes {
    /// `(P, Q)` with `B(z) = P B(0) + Q B(0)^dagger`.
    pub fn bogoliubov(&self) -> (ComplexMatrix, ComplexMatrix) {
        let n = self.gains.len();
        let diag = |f: fn(f64) -> f64| {
            ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                self.gains.iter().map(|&r| Complex64::new(f(r), 0.0)),
            ))
        };
        let ud = self.upsilon.adjoint();
        let p = &ud * diag(f64::cosh) * &self.upsilon;
        let q = &ud * diag(f64::sinh) * self.upsilon.conjugate();
        (p, q)
    }

    /// Propagator of the slowly varying supermode amplitudes.
    pub fn slow_propagator(&self) -> SymplecticMatrix {
        let (p, q) = self.bogoliubov();
        SymplecticMatrix::new_unchecked(quadrature_from_bogoliubov(&p, &q))
    }

    /// Linear-supermode basis, lab frame.
    pub fn linear_supermode_propagator(&self) -> SymplecticMatrix {
        lab_frame_phases(&self.modes, self.z).compose(&self.slow_propagator())
    }

    /// Individual-waveguide basis: `A = M^T e^{i Lambda z} B`.
    pub fn individual_propagator(&self) -> SymplecticMatrix {
        let mt = SymplecticMatrix::new_unchecked(block_diag2(&self.modes.matrix.transpose()));
        let m = SymplecticMatrix::new_unchecked(block_diag2(&self.modes.matrix));
        mt.compose(&self.linear_supermode_propagator()).compose(&m)
    }

    /// Propagator whose rows are the nonlinear supermodes; its covariance is
    /// `diag(e^{2r}, e^{-2r})`.
    pub fn nonlinear_propagator(&self) -> SymplecticMatrix {
        let u = SymplecticMatrix::new_unchecked(passive_from_unitary(&self.upsilon));
        u.compose(&self.slow_propagator())
    }

    pub fn state(&self, basis: Basis) -> GaussianState {
        let s = match basis {
            Basis::Individual => self.individual_propagator(),
            Basis::LinearSupermode => self.linear_supermode_propagator(),
            Basis::NonlinearSupermode => self.nonlinear_propagator(),
        };
        GaussianState::from_propagator(self.z, s, basis)
    }
}

pub fn nonlinear_supermodes(
    cfg: &ArrayConfig,
    pump: &PumpProfile,
    z: f64,
) -> Result<NonlinearSupermodes> {
    check_inputs(cfg, pump, z)?;
    let modes = linear_supermodes(cfg)?;
    let w = super::integrated_l(cfg, pump, &modes, z)?;
    let t = takagi(&w)?;
    Ok(NonlinearSupermodes {
        z,
        upsilon: t.unitary,
        gains: t.diagonal,
        modes,
    })
}

/// Closed-form evolution of one linear supermode under a flat pump:
/// `B_k(z) = p B_k(0) + q B_k(0)^dagger` in the lab frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPumpBlock {
    pub lambda: f64,
    /// `F = sqrt(lambda^2 - 4 |eta|^2)`, imaginary below threshold.
    pub frequency: Complex64,
    pub p: Complex64,
    pub q: Complex64,
    /// `2 x 2` quadrature propagator of the supermode.
    pub block: RealMatrix,
}

impl FlatPumpBlock {
    /// Distance between zero and maximal squeezing, `pi / (2 F)`, when `F` is
    /// real and nonzero.
    pub fn oscillation_length(&self) -> Option<f64> {
        (self.frequency.im == 0.0 && self.frequency.re > 0.0)
            .then(|| std::f64::consts::PI / (2.0 * self.frequency.re))
    }
}

/// Per-supermode solution for `eta_j = eta` in every waveguide:
/// `p = cos(F z) + i lambda sin(F z) / F`, `q = 2 i eta sin(F z) / F`.
pub fn flat_pump_analytic(cfg: &ArrayConfig, eta: Complex64, z: f64) -> Result<Vec<FlatPumpBlock>> {
    check_inputs(cfg, &PumpProfile::flat(cfg.n, eta.norm(), eta.arg()), z)?;
    let modes = linear_supermodes(cfg)?;
    let i = Complex64::i();
    Ok(modes
        .eigenvalues
        .iter()
        .map(|&lambda| {
            let f = Complex64::new(lambda * lambda - 4.0 * eta.norm_sqr(), 0.0).sqrt();
            let fz = f * z;
            let sinc_z = if fz.norm() < 1e-6 {
                Complex64::new(z, 0.0) * (1.0 - fz * fz / 6.0)
            } else {
                fz.sin() / f
            };
            let p = fz.cos() + i * lambda * sinc_z;
            let q = 2.0 * i * eta * sinc_z;
            let block = quadrature_from_bogoliubov(
                &ComplexMatrix::from_element(1, 1, p),
                &ComplexMatrix::from_element(1, 1, q),
            );
            FlatPumpBlock {
                lambda,
                frequency: f,
                p,
                q,
                block,
            }
        })
        .collect())
}

/// The blocks of [`flat_pump_analytic`] assembled into the linear-supermode
/// basis.
pub fn flat_pump_propagator(cfg: &ArrayConfig, eta: Complex64, z: f64) -> Result<GaussianState> {
    let blocks = flat_pump_analytic(cfg, eta, z)?;
    let n = cfg.n;
    let mut s = RealMatrix::zeros(2 * n, 2 * n);
    for (k, b) in blocks.iter().enumerate() {
        s[(k, k)] = b.block[(0, 0)];
        s[(k, n + k)] = b.block[(0, 1)];
        s[(n + k, k)] = b.block[(1, 0)];
        s[(n + k, n + k)] = b.block[(1, 1)];
    }
    Ok(GaussianState::from_propagator(
        z,
        SymplecticMatrix::new_unchecked(s),
        Basis::LinearSupermode,
    ))
}

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{check_inputs, ArrayConfig, PumpProfile};
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::{Error, Result};

/// Below this `|lambda_k + lambda_k'|` (mm^-1) the integrated coupling uses
/// its linear-in-`z` limit.
pub const ZERO_DETUNING: f64 = 1e-12;

/// Eigenmodes of the passive coupling: `M K M^T = diag(eigenvalues)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSupermodes {
    /// Row `k` is supermode `k`.
    pub matrix: RealMatrix,
    /// mm^-1, descending.
    pub eigenvalues: Vec<f64>,
}

impl LinearSupermodes {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Supermodes of the array, sorted by descending propagation constant. Each
/// row's first non-negligible component is positive.
pub fn linear_supermodes(cfg: &ArrayConfig) -> Result<LinearSupermodes> {
    cfg.validate()?;
    let n = cfg.n;
    let eig = SymmetricEigen::new(cfg.coupling_matrix());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut matrix = RealMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        let sign = v
            .iter()
            .find(|c| c.abs() > 1e-12)
            .map_or(1.0, |c| c.signum());
        for j in 0..n {
            matrix[(k, j)] = sign * v[j];
        }
        eigenvalues.push(eig.eigenvalues[idx]);
    }
    Ok(LinearSupermodes {
        matrix,
        eigenvalues,
    })
}

fn check_modes(cfg: &ArrayConfig, modes: &LinearSupermodes) -> Result<()> {
    if modes.n() != cfg.n || modes.matrix.nrows() != cfg.n || modes.matrix.ncols() != cfg.n {
        return Err(Error::DimensionMismatch {
            expected: cfg.n,
            got: modes.n(),
        });
    }
    Ok(())
}

/// Shared kernel of `L(z)` and its integral: entry `(k, k')` is
/// `2 i sum_j |eta_j| M_kj M_k'j e^{i phi_j} g(lambda_k + lambda_k')`.
fn supermode_coupling(
    pump: &PumpProfile,
    modes: &LinearSupermodes,
    g: impl Fn(f64) -> Complex64,
) -> ComplexMatrix {
    let n = modes.n();
    let eta = pump.complex();
    let m = &modes.matrix;
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for kp in k..n {
            let overlap: Complex64 = (0..n).map(|j| eta[j] * (m[(k, j)] * m[(kp, j)])).sum();
            let v = Complex64::new(0.0, 2.0)
                * overlap
                * g(modes.eigenvalues[k] + modes.eigenvalues[kp]);
            out[(k, kp)] = v;
            out[(kp, k)] = v;
        }
    }
    out
}

/// Local supermode coupling
/// `L_kk'(z) = 2 i sum_j |eta_j| M_kj M_k'j e^{i (phi_j - (lambda_k + lambda_k') z)}`.
pub fn coupling_matrix_l(
    cfg: &ArrayConfig,
    pump: &PumpProfile,
    modes: &LinearSupermodes,
    z: f64,
) -> Result<ComplexMatrix> {
    check_inputs(cfg, pump, z)?;
    check_modes(cfg, modes)?;
    Ok(supermode_coupling(pump, modes, |s| {
        Complex64::from_polar(1.0, -s * z)
    }))
}

/// `int_0^z L(z') dz'` in closed form.
pub fn integrated_l(
    cfg: &ArrayConfig,
    pump: &PumpProfile,
    modes: &LinearSupermodes,
    z: f64,
) -> Result<ComplexMatrix> {
    check_inputs(cfg, pump, z)?;
    check_modes(cfg, modes)?;
    Ok(supermode_coupling(pump, modes, |s| {
        if s.abs() < ZERO_DETUNING {
            Complex64::new(z, 0.0)
        } else {
            // (1 - e^{-i s z}) / (i s)
            let (sin, cos) = (s * z).sin_cos();
            Complex64::new(sin, cos - 1.0) / s
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, max_abs_complex};
    use std::f64::consts::PI;

    #[test]
    fn homogeneous_spectrum() {
        let c0 = 0.24;
        let modes = linear_supermodes(&ArrayConfig::homogeneous(5, c0, 30.0)).unwrap();
        for (k, l) in modes.eigenvalues.iter().enumerate() {
            let expected = 2.0 * c0 * ((k + 1) as f64 * PI / 6.0).cos();
            assert!((l - expected).abs() < 1e-12);
        }
        let m = &modes.matrix;
        assert!(max_abs(&(m * m.transpose() - RealMatrix::identity(5, 5))) < 1e-12);
    }

    #[test]
    fn three_guides() {
        let modes = linear_supermodes(&ArrayConfig::homogeneous(3, 0.5, 1.0)).unwrap();
        let s = 2f64.sqrt() * 0.5;
        for (a, b) in modes.eigenvalues.iter().zip([s, 0.0, -s]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_guide() {
        let modes = linear_supermodes(&ArrayConfig::homogeneous(1, 0.3, 1.0)).unwrap();
        assert_eq!(modes.matrix, RealMatrix::identity(1, 1));
        assert_eq!(modes.eigenvalues, vec![0.0]);
    }

    #[test]
    fn zero_detuning_is_linear_in_z() {
        let cfg = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let modes = linear_supermodes(&cfg).unwrap();
        let pump = PumpProfile::flat(5, 0.015, 0.0);
        let a = integrated_l(&cfg, &pump, &modes, 10.0).unwrap();
        let b = integrated_l(&cfg, &pump, &modes, 20.0).unwrap();
        // lambda_3 = 0 and lambda_1 = -lambda_5
        for (k, kp) in [(2, 2), (0, 4), (1, 3)] {
            assert!((b[(k, kp)] - a[(k, kp)] * 2.0).norm() < 1e-15);
        }
        assert!((a[(2, 2)] - Complex64::new(0.0, 2.0 * 0.015 * 10.0)).norm() < 1e-15);
        assert!(max_abs_complex(&(&a - a.transpose())) == 0.0);
    }
}

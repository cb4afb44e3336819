use num_complex::Complex64;

use super::{max_abs, passive_from_unitary, takagi, ComplexMatrix, RealMatrix, SymplecticMatrix};
use crate::{Error, Result};

const PASSIVE_TOL: f64 = 1e-12;

/// `V = S S^T = R_1 K^2 R_1^T` with `R_1` orthogonal symplectic and
/// `K^2 = diag(e^{2r}, e^{-2r})`.
#[derive(Debug, Clone)]
pub struct BlochMessiahFactorization {
    pub passive: SymplecticMatrix,
    /// Squeezing parameters `r_m >= 0`, descending.
    pub squeezing: Vec<f64>,
    /// Diagonal of `K^2`: `(e^{2r_1}, .., e^{2r_N}, e^{-2r_1}, .., e^{-2r_N})`.
    pub squeezers: Vec<f64>,
}

impl BlochMessiahFactorization {
    pub fn k2(&self) -> RealMatrix {
        RealMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.squeezers))
    }

    /// `R_1 K^2 R_1^T`.
    pub fn covariance(&self) -> RealMatrix {
        let r = self.passive.matrix();
        super::symmetrize(&(r * self.k2() * r.transpose()))
    }
}

/// Bloch-Messiah factorization of the state `S` prepares from vacuum.
///
/// The anomalous moment `<a a^T> = (Vxx - Vyy + i (Vxy + Vyx)) / 4` equals
/// `U diag(sinh(2r) / 2) U^T`, so its Takagi factorization yields the passive
/// part and the squeezing parameters at once. In each squeezed mode `x` is
/// anti-squeezed and `y` squeezed.
pub fn bloch_messiah(s: &SymplecticMatrix) -> Result<BlochMessiahFactorization> {
    let checked = SymplecticMatrix::new(s.matrix().clone())?;
    let n = checked.n_modes();
    let v = checked.covariance();

    if max_abs(&(&v - RealMatrix::identity(2 * n, 2 * n))) < PASSIVE_TOL {
        return Ok(BlochMessiahFactorization {
            passive: checked,
            squeezing: vec![0.0; n],
            squeezers: vec![1.0; 2 * n],
        });
    }

    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let re = v[(i, j)] - v[(n + i, n + j)];
        let im = v[(i, n + j)] + v[(j, n + i)];
        Complex64::new(re, im) * 0.25
    });
    let m = (&m + m.transpose()) * Complex64::new(0.5, 0.0);
    let t = takagi(&m)?;
    let squeezing: Vec<f64> = t
        .diagonal
        .iter()
        .map(|&sigma| (2.0 * sigma).asinh() / 2.0)
        .collect();
    let squeezers = squeezing
        .iter()
        .map(|r| (2.0 * r).exp())
        .chain(squeezing.iter().map(|r| (-2.0 * r).exp()))
        .collect();
    let passive = passive_from_unitary(&t.unitary.adjoint());
    if passive.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(BlochMessiahFactorization {
        passive: SymplecticMatrix::new_unchecked(passive),
        squeezing,
        squeezers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_exp, orthogonality_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let h = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = (&h + h.adjoint()) * Complex64::new(0.0, 0.5);
        mat_exp(&h).unwrap()
    }

    #[test]
    fn identity_has_no_squeezing() {
        let f = bloch_messiah(&SymplecticMatrix::identity(3)).unwrap();
        assert_eq!(f.passive.matrix(), &RealMatrix::identity(6, 6));
        assert!(f.squeezing.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn single_mode_squeezer() {
        let r: f64 = 0.7;
        let s = SymplecticMatrix::new(RealMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            vec![r.exp(), (-r).exp()],
        )))
        .unwrap();
        let f = bloch_messiah(&s).unwrap();
        assert!((f.squeezing[0] - r).abs() < 1e-12);
        assert!((f.squeezers[0] - (2.0 * r).exp()).abs() < 1e-12);
        assert!(max_abs(&(f.passive.matrix() - RealMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn random_passive_returns_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SymplecticMatrix::new(passive_from_unitary(&random_unitary(4, &mut rng))).unwrap();
        let f = bloch_messiah(&s).unwrap();
        assert!(f.squeezing.iter().all(|&r| r == 0.0));
        assert_eq!(f.passive.matrix(), s.matrix());
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 8] {
            let u1 = passive_from_unitary(&random_unitary(n, &mut rng));
            let u2 = passive_from_unitary(&random_unitary(n, &mut rng));
            let r: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.2)).collect();
            let k = RealMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                2 * n,
                r.iter()
                    .map(|x| x.exp())
                    .chain(r.iter().map(|x| (-x).exp())),
            ));
            let s = SymplecticMatrix::new(u1 * k * u2).unwrap();
            let f = bloch_messiah(&s).unwrap();
            assert!(max_abs(&(f.covariance() - s.covariance())) < 1e-9);
            assert!(orthogonality_defect(f.passive.matrix()) < 1e-10);
            assert!(f.passive.defect() < 1e-10);
            let mut sorted = r.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in f.squeezing.iter().zip(&sorted) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_symplectic() {
        let m = RealMatrix::identity(2, 2) * 2.0;
        assert!(matches!(
            bloch_messiah(&SymplecticMatrix::new_unchecked(m)),
            Err(Error::NotSymplectic { .. })
        ));
    }
}

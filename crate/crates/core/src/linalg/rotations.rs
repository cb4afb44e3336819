use super::{RealMatrix, SymplecticMatrix};
use crate::{Error, Result};

/// Number of plane rotations in `SO(n)`: `n (n - 1) / 2`.
pub fn euler_angle_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Product of Givens rotations over the planes `(0,1), (0,2), .., (n-2,n-1)`
/// in that order. Each factor is the identity except for
/// `[[cos a, sin a], [-sin a, cos a]]` on its plane.
pub fn euler_orthogonal(angles: &[f64], n: usize) -> Result<RealMatrix> {
    let expected = euler_angle_count(n);
    if angles.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: angles.len(),
        });
    }
    let mut e = RealMatrix::identity(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (s, c) = angles[k].sin_cos();
            // right-multiply by G(i, j): only columns i and j change
            for r in 0..n {
                let ei = e[(r, i)];
                let ej = e[(r, j)];
                e[(r, i)] = c * ei - s * ej;
                e[(r, j)] = s * ei + c * ej;
            }
            k += 1;
        }
    }
    Ok(e)
}

/// Inverse of [`euler_orthogonal`] for a proper rotation (`det = +1`).
///
/// The first column of the product only depends on the `(0, j)` angles and
/// has hyperspherical form, so the angles are peeled off one plane row at a
/// time. Returned angles for `(i, j)` with `j > i + 1` lie in `[-pi/2, pi/2]`.
pub fn euler_angles_of(o: &RealMatrix) -> Result<Vec<f64>> {
    let n = super::ensure_square(o)?;
    if n > 0 && o.clone().determinant() < 0.0 {
        return Err(Error::InvalidConfig(
            "euler angles need a rotation with determinant +1".into(),
        ));
    }
    let mut rest = o.clone();
    let mut angles = Vec::with_capacity(euler_angle_count(n));
    for i in 0..n {
        let mut rho = rest[(i, i)];
        let mut row = Vec::with_capacity(n - i - 1);
        for j in i + 1..n {
            let cj = rest[(j, i)];
            let a = (-cj).atan2(rho);
            rho = rho.hypot(cj);
            row.push(a);
        }
        // undo this plane row: rest <- P_i^T rest
        let mut p = RealMatrix::identity(n, n);
        for (off, &a) in row.iter().enumerate() {
            let j = i + 1 + off;
            let (s, c) = a.sin_cos();
            for r in 0..n {
                let pi = p[(r, i)];
                let pj = p[(r, j)];
                p[(r, i)] = c * pi - s * pj;
                p[(r, j)] = s * pi + c * pj;
            }
        }
        rest = p.transpose() * rest;
        angles.extend(row);
    }
    Ok(angles)
}

/// Local-oscillator phase matrix `[[cos t, sin t], [-sin t, cos t]]` with
/// diagonal blocks. Row `i` gives `x_i(t_i) = cos t_i x_i + sin t_i y_i`.
pub fn d_lo(theta: &[f64]) -> SymplecticMatrix {
    let n = theta.len();
    let mut d = RealMatrix::zeros(2 * n, 2 * n);
    for (i, t) in theta.iter().enumerate() {
        let (s, c) = t.sin_cos();
        d[(i, i)] = c;
        d[(i, n + i)] = s;
        d[(n + i, i)] = -s;
        d[(n + i, n + i)] = c;
    }
    SymplecticMatrix::new_unchecked(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, orthogonality_defect, symplectic_defect};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_angles_identity() {
        assert_eq!(
            euler_orthogonal(&[0.0; 10], 5).unwrap(),
            RealMatrix::identity(5, 5)
        );
    }

    #[test]
    fn single_givens() {
        let a: f64 = 0.4;
        let e = euler_orthogonal(&[a], 2).unwrap();
        let expected = RealMatrix::from_row_slice(2, 2, &[a.cos(), a.sin(), -a.sin(), a.cos()]);
        assert!(max_abs(&(e - expected)) < 1e-16);
    }

    #[test]
    fn five_modes_need_ten_angles() {
        assert_eq!(euler_angle_count(5), 10);
        assert!(matches!(
            euler_orthogonal(&[0.0; 9], 5),
            Err(Error::DimensionMismatch {
                expected: 10,
                got: 9
            })
        ));
    }

    #[test]
    fn d_lo_cases() {
        assert_eq!(d_lo(&[0.0; 3]).into_inner(), RealMatrix::identity(6, 6));
        let d = d_lo(&[FRAC_PI_2; 2]).into_inner();
        // x -> y and y -> -x
        assert!((d[(0, 2)] - 1.0).abs() < 1e-16 && (d[(2, 0)] + 1.0).abs() < 1e-16);
        assert!(d[(0, 0)].abs() < 1e-16);
        let d = d_lo(&[0.3, -1.2, 2.9, 0.05]);
        assert!(symplectic_defect(d.matrix()) < 1e-12);
    }

    proptest! {
        #[test]
        fn euler_is_rotation(angles in proptest::collection::vec(-3.2f64..3.2, 10)) {
            let e = euler_orthogonal(&angles, 5).unwrap();
            prop_assert!(orthogonality_defect(&e) < 1e-12);
            prop_assert!((e.clone().determinant() - 1.0).abs() < 1e-12);
            let back = euler_angles_of(&e).unwrap();
            let again = euler_orthogonal(&back, 5).unwrap();
            prop_assert!(max_abs(&(again - e)) < 1e-12);
        }
    }
}

//! Dense real/complex matrix kernel.
//!
//! Every phase-space matrix in this crate uses the quadrature ordering
//! `(x_1, .., x_N, y_1, .., y_N)`, so the symplectic form is
//! `Omega = [[0, I], [-I, 0]]`.

mod bloch_messiah;
mod expm;
mod rotations;
mod symplectic;
mod takagi;

pub use bloch_messiah::{bloch_messiah, BlochMessiahFactorization};
pub use expm::mat_exp;
pub use rotations::{d_lo, euler_angle_count, euler_angles_of, euler_orthogonal};
pub use symplectic::{
    omega, symplectic_defect, symplectic_refine, symplectic_residual, SymplecticMatrix,
    SYMPLECTIC_TOL,
};
pub use takagi::{takagi, TakagiFactorization};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest absolute entry.
pub fn max_abs(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_complex(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

/// `diag(a, a)` for an `n x n` block `a`.
pub fn block_diag2(a: &RealMatrix) -> RealMatrix {
    let n = a.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (n, n)).copy_from(a);
    out
}

/// Real phase-space matrix of the passive transformation `a -> U a`.
///
/// With `a = (x + i y) / 2` this is `[[Re U, -Im U], [Im U, Re U]]`.
pub fn passive_from_unitary(u: &ComplexMatrix) -> RealMatrix {
    let n = u.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            out[(i, j)] = z.re;
            out[(i, n + j)] = -z.im;
            out[(n + i, j)] = z.im;
            out[(n + i, n + j)] = z.re;
        }
    }
    out
}

/// Converts the complex Bogoliubov map `a' = P a + Q a^dagger` into the
/// real quadrature matrix acting on `(x, y)`.
pub fn quadrature_from_bogoliubov(p: &ComplexMatrix, q: &ComplexMatrix) -> RealMatrix {
    let n = p.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let plus = p[(i, j)] + q[(i, j)];
            let minus = p[(i, j)] - q[(i, j)];
            out[(i, j)] = plus.re;
            out[(i, n + j)] = -minus.im;
            out[(n + i, j)] = plus.im;
            out[(n + i, n + j)] = minus.re;
        }
    }
    out
}

/// `(m + m^T) / 2`.
pub fn symmetrize(m: &RealMatrix) -> RealMatrix {
    (m + m.transpose()) * 0.5
}

/// `max |O^T O - I|`.
pub fn orthogonality_defect(o: &RealMatrix) -> f64 {
    let n = o.ncols();
    max_abs(&(o.transpose() * o - RealMatrix::identity(n, n)))
}

pub(crate) fn ensure_square<T>(m: &DMatrix<T>) -> crate::Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(crate::Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

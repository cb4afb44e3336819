use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{max_abs_complex, ComplexMatrix, RealMatrix};
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// `unitary * W * unitary^T = diag(diagonal)`, with `diagonal` descending.
#[derive(Debug, Clone)]
pub struct TakagiFactorization {
    pub unitary: ComplexMatrix,
    pub diagonal: Vec<f64>,
}

impl TakagiFactorization {
    /// `W = unitary^dagger diag(diagonal) conj(unitary)`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.diagonal.len(),
            self.diagonal.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        self.unitary.adjoint() * d * self.unitary.conjugate()
    }
}

/// Autonne-Takagi factorization of a complex symmetric matrix.
///
/// Solved through the real symmetric embedding `H = [[Re W, Im W], [Im W, -Re W]]`:
/// an eigenvector `(x; y)` of `H` with eigenvalue `s >= 0` gives a column
/// `u = x + i y` with `W conj(u) = s u`. Eigenvalues of `H` come in `+-s`
/// pairs, so the `n` largest are the Takagi values. Columns are
/// re-orthonormalized in the complex inner product, which only matters in
/// the null space where `u` and `i u` both appear.
pub fn takagi(w: &ComplexMatrix) -> Result<TakagiFactorization> {
    let n = super::ensure_square(w)?;
    if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asymmetry = max_abs_complex(&(w - w.transpose()));
    if asymmetry >= SYMMETRY_TOL * max_abs_complex(w).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    if n == 0 {
        return Ok(TakagiFactorization {
            unitary: ComplexMatrix::zeros(0, 0),
            diagonal: Vec::new(),
        });
    }

    let mut h = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            // symmetrized so the embedding is exactly symmetric
            let v = (w[(i, j)] + w[(j, i)]) * 0.5;
            h[(i, j)] = v.re;
            h[(i, n + j)] = v.im;
            h[(n + i, j)] = v.im;
            h[(n + i, n + j)] = -v.re;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut diagonal = Vec::with_capacity(n);
    for &idx in order.iter().take(n) {
        let v = eig.eigenvectors.column(idx);
        let u = DVector::from_fn(n, |k, _| Complex64::new(v[k], v[n + k]));
        diagonal.push(eig.eigenvalues[idx].max(0.0));
        cols.push(u);
    }

    let unitary_cols = orthonormalize(cols, n);
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, c) in unitary_cols.iter().enumerate() {
        u.set_column(j, c);
    }
    Ok(TakagiFactorization {
        unitary: u.adjoint(),
        diagonal,
    })
}

/// Modified Gram-Schmidt. Dependent columns are replaced by the first
/// standard basis vector that survives orthogonalization; the sign is fixed
/// so the largest-modulus component has nonnegative real part.
fn orthonormalize(cols: Vec<DVector<Complex64>>, n: usize) -> Vec<DVector<Complex64>> {
    const DEPENDENT: f64 = 1e-6;
    let mut out: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    for c in cols {
        let mut v = project_out(c, &out);
        let mut norm = v.norm();
        if norm < DEPENDENT {
            for k in 0..n {
                let mut e = DVector::zeros(n);
                e[k] = Complex64::new(1.0, 0.0);
                let cand = project_out(e, &out);
                let cn = cand.norm();
                if cn > 0.5 {
                    v = cand;
                    norm = cn;
                    break;
                }
            }
        }
        v /= Complex64::new(norm, 0.0);
        let lead = v.iter().copied().fold(Complex64::new(0.0, 0.0), |acc, z| {
            if z.norm() > acc.norm() + 1e-12 {
                z
            } else {
                acc
            }
        });
        if lead.re < 0.0 {
            v = -v;
        }
        out.push(v);
    }
    out
}

fn project_out(mut v: DVector<Complex64>, basis: &[DVector<Complex64>]) -> DVector<Complex64> {
    for _ in 0..2 {
        for b in basis {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
    }
    v
}

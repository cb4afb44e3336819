use super::{max_abs, RealMatrix};
use crate::{Error, Result};

/// Tolerance on `max |S Omega S^T - Omega|` for unit-scale matrices.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// `Omega = [[0, I], [-I, 0]]` for `n` modes.
pub fn omega(n: usize) -> RealMatrix {
    let mut o = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(i, n + i)] = 1.0;
        o[(n + i, i)] = -1.0;
    }
    o
}

/// A real `2N x 2N` matrix preserving `Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(RealMatrix);

impl SymplecticMatrix {
    /// Validates `m`. The tolerance is [`SYMPLECTIC_TOL`] scaled by
    /// `max(1, max|m|^2)`, the floating-point floor for a product of two
    /// entries of that size.
    pub fn new(m: RealMatrix) -> Result<Self> {
        let n = super::ensure_square(&m)?;
        if n % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: n,
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let defect = symplectic_defect(&m);
        let scale = max_abs(&m).powi(2).max(1.0);
        if defect > SYMPLECTIC_TOL * scale {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is symplectic by construction.
    pub fn new_unchecked(m: RealMatrix) -> Self {
        debug_assert!(m.nrows() == m.ncols() && m.nrows().is_multiple_of(2));
        Self(m)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self(RealMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_inner(self) -> RealMatrix {
        self.0
    }

    /// `max |S Omega S^T - Omega|`, see [`symplectic_defect`].
    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.0)
    }

    /// `self * other`.
    pub fn compose(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        Self(&self.0 * &other.0)
    }

    /// `S^-1 = -Omega S^T Omega`, exact up to sign flips.
    pub fn inverse(&self) -> SymplecticMatrix {
        let n = self.n_modes();
        let st = self.0.transpose();
        let mut out = RealMatrix::zeros(2 * n, 2 * n);
        // -Omega S^T Omega: block ((A,B),(C,D))^T -> ((D^T, -B^T), (-C^T, A^T))
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = st[(n + i, n + j)];
                out[(i, n + j)] = -st[(n + i, j)];
                out[(n + i, j)] = -st[(i, n + j)];
                out[(n + i, n + j)] = st[(i, j)];
            }
        }
        Self(out)
    }

    pub fn transpose(&self) -> SymplecticMatrix {
        Self(self.0.transpose())
    }

    /// `S S^T`, the covariance matrix reached from vacuum.
    pub fn covariance(&self) -> RealMatrix {
        super::symmetrize(&(&self.0 * self.0.transpose()))
    }
}

impl AsRef<RealMatrix> for SymplecticMatrix {
    fn as_ref(&self) -> &RealMatrix {
        &self.0
    }
}

/// `S Omega S^T - Omega` evaluated with compensated dot products, so the
/// result reflects the matrix and not the rounding of the check itself.
pub fn symplectic_residual(s: &RealMatrix) -> RealMatrix {
    let n = s.nrows() / 2;
    RealMatrix::from_fn(2 * n, 2 * n, |i, j| {
        // (S Omega S^T)_ij = sum_k S_ik S_j,n+k - S_i,n+k S_jk
        let mut acc = CompensatedSum::default();
        for k in 0..n {
            acc.add_product(s[(i, k)], s[(j, n + k)]);
            acc.add_product(-s[(i, n + k)], s[(j, k)]);
        }
        let target = if j == i + n && i < n {
            1.0
        } else if i == j + n && j < n {
            -1.0
        } else {
            0.0
        };
        acc.add(-target);
        acc.value()
    })
}

/// `max |S Omega S^T - Omega|`, see [`symplectic_residual`].
pub fn symplectic_defect(s: &RealMatrix) -> f64 {
    max_abs(&symplectic_residual(s))
}

/// One Gauss-Newton step onto the symplectic group: adds the least-norm `D`
/// solving `D Omega S^T + S Omega D^T = -(S Omega S^T - Omega)`. The
/// correction is of the size of the rounding error it removes.
pub fn symplectic_refine(s: &RealMatrix) -> RealMatrix {
    let dim = s.nrows();
    let e = symplectic_residual(s);
    // P = Omega S^T; constraint (i, j), i < j, reads
    // sum_b D_ib P_bj - sum_b P_bi D_jb = -E_ij
    let n = dim / 2;
    let p = RealMatrix::from_fn(
        dim,
        dim,
        |r, c| if r < n { s[(c, n + r)] } else { -s[(c, r - n)] },
    );
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
        .collect();
    let mut a = RealMatrix::zeros(pairs.len(), dim * dim);
    let mut rhs = nalgebra::DVector::zeros(pairs.len());
    for (row, &(i, j)) in pairs.iter().enumerate() {
        for b in 0..dim {
            a[(row, i * dim + b)] += p[(b, j)];
            a[(row, j * dim + b)] -= p[(b, i)];
        }
        rhs[row] = -e[(i, j)];
    }
    let gram = &a * a.transpose();
    let Some(mu) = gram.lu().solve(&rhs) else {
        return s.clone();
    };
    let d = a.transpose() * mu;
    let refined = RealMatrix::from_fn(dim, dim, |i, j| s[(i, j)] + d[i * dim + j]);
    if symplectic_defect(&refined) < max_abs(&e) {
        refined
    } else {
        s.clone()
    }
}

/// Dot2-style accumulator (error-free products via fused multiply-add).
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    err: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let s = self.sum + v;
        let bp = s - self.sum;
        self.err += (self.sum - (s - bp)) + (v - bp);
        self.sum = s;
    }

    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let perr = a.mul_add(b, -p);
        self.add(p);
        self.err += perr;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.err
    }
}

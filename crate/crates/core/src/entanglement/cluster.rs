use nalgebra::SymmetricEigen;

use super::graph::{GraphPreset, GraphSpec};
use crate::linalg::{
    bloch_messiah, block_diag2, d_lo, euler_angle_count, euler_orthogonal, RealMatrix,
    SymplecticMatrix,
};
use crate::model::GaussianState;
use crate::{Error, Result};

/// `S_C = [[X_s, -Y_s], [Y_s, X_s]]`, turning `y`-squeezed inputs into the
/// cluster state of a graph.
#[derive(Debug, Clone)]
pub struct ClusterTransform {
    pub x_s: RealMatrix,
    pub y_s: RealMatrix,
    pub transform: SymplecticMatrix,
}

/// `X_s = (J^2 + I)^{-1/2}`, `Y_s = J X_s` over the mode adjacency. The GHZ
/// preset is the star transform followed by its LO rotation.
pub fn cluster_transform(graph: &GraphSpec) -> Result<ClusterTransform> {
    let n = graph.n();
    let j = graph.mode_adjacency();
    let eig = SymmetricEigen::new(&j * &j + RealMatrix::identity(n, n));
    let inv_sqrt = eig.eigenvalues.map(|v| v.sqrt().recip());
    let x = &eig.eigenvectors * RealMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let x = (&x + x.transpose()) * 0.5;
    let y = &j * &x;
    let (x, y) = if graph.preset_kind() == GraphPreset::Ghz {
        // rows scaled by e^{i o}: X + iY -> (cos o + i sin o)(X + iY)
        let offsets = graph.ghz_offsets();
        let mut xr = x.clone();
        let mut yr = y.clone();
        for (m, o) in offsets.iter().enumerate() {
            let (s, c) = o.sin_cos();
            for k in 0..n {
                xr[(m, k)] = c * x[(m, k)] - s * y[(m, k)];
                yr[(m, k)] = s * x[(m, k)] + c * y[(m, k)];
            }
        }
        (xr, yr)
    } else {
        (x, y)
    };
    let mut s = RealMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&x);
    s.view_mut((0, n), (n, n)).copy_from(&(-&y));
    s.view_mut((n, 0), (n, n)).copy_from(&y);
    s.view_mut((n, n), (n, n)).copy_from(&x);
    Ok(ClusterTransform {
        x_s: x,
        y_s: y,
        transform: SymplecticMatrix::new_unchecked(s),
    })
}

fn block_orthogonal(angles: &[f64], n: usize) -> Result<SymplecticMatrix> {
    Ok(SymplecticMatrix::new_unchecked(block_diag2(
        &euler_orthogonal(angles, n)?,
    )))
}

/// `S_LO = S_C diag(O, O) R_1^T`, where `R_1` is the passive factor of the
/// Bloch-Messiah decomposition and `O = euler_orthogonal(euler)`.
pub fn s_lo_from(
    cluster: &ClusterTransform,
    passive: &SymplecticMatrix,
    euler: &[f64],
) -> Result<SymplecticMatrix> {
    let n = passive.n_modes();
    if cluster.transform.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cluster.transform.n_modes(),
        });
    }
    Ok(cluster
        .transform
        .compose(&block_orthogonal(euler, n)?)
        .compose(&passive.transpose()))
}

pub fn s_lo(graph: &GraphSpec, state: &GaussianState, euler: &[f64]) -> Result<SymplecticMatrix> {
    let bm = bloch_messiah(&state.propagator)?;
    s_lo_from(&cluster_transform(graph)?, &bm.passive, euler)
}

/// Detection map `diag(O_post, O_post) D_LO(theta)`.
pub fn detection_transform(theta: &[f64], post: &[f64]) -> Result<SymplecticMatrix> {
    let n = theta.len();
    if post.len() != euler_angle_count(n) {
        return Err(Error::DimensionMismatch {
            expected: euler_angle_count(n),
            got: post.len(),
        });
    }
    Ok(block_orthogonal(post, n)?.compose(&d_lo(theta)))
}

/// `|| S_LO - diag(O_post, O_post) D_LO(theta) ||_F`.
pub fn emulation_error_from(s_lo: &SymplecticMatrix, theta: &[f64], post: &[f64]) -> Result<f64> {
    let t = detection_transform(theta, post)?;
    if t.n_modes() != s_lo.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: s_lo.n_modes(),
            got: t.n_modes(),
        });
    }
    Ok((s_lo.matrix() - t.matrix()).norm())
}

pub fn emulation_error(
    graph: &GraphSpec,
    state: &GaussianState,
    euler: &[f64],
    theta: &[f64],
    post: &[f64],
) -> Result<f64> {
    emulation_error_from(&s_lo(graph, state, euler)?, theta, post)
}

/// The state after homodyne phases `theta` and electronic recombination
/// `O_post`; cluster nullifiers are read on it at zero LO phase.
pub fn emulated_state(state: &GaussianState, theta: &[f64], post: &[f64]) -> Result<GaussianState> {
    let t = detection_transform(theta, post)?;
    crate::measurement::change_basis(state, &t, state.basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, orthogonality_defect};

    #[test]
    fn edgeless_graph_is_identity() {
        let g = GraphSpec::custom(RealMatrix::zeros(4, 4)).unwrap();
        let c = cluster_transform(&g).unwrap();
        assert!(max_abs(&(c.transform.matrix() - RealMatrix::identity(8, 8))) < 1e-15);
    }

    #[test]
    fn every_preset_is_orthogonal_symplectic() {
        for p in GraphPreset::NAMED {
            let c = cluster_transform(&GraphSpec::preset(p).unwrap()).unwrap();
            assert!(c.transform.defect() < 1e-12);
            assert!(orthogonality_defect(c.transform.matrix()) < 1e-12);
        }
    }

    #[test]
    fn product_form_has_zero_error() {
        let theta = [0.1, -0.4, 2.0];
        let post = [0.3, 1.1, -0.7];
        let t = detection_transform(&theta, &post).unwrap();
        assert!(emulation_error_from(&t, &theta, &post).unwrap() < 1e-15);
        assert!(detection_transform(&theta, &post[..2]).is_err());
    }
}

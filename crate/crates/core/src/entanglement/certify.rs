use serde::{Deserialize, Serialize};

use super::graph::{nullifiers_for, preset_bounds, GraphPreset, GraphSpec, InseparabilityBound};
use crate::measurement::{combination_variance, QuadratureCombination};
use crate::model::GaussianState;
use crate::{Error, Result};

/// Separability threshold of each van Loock-Furusawa inequality.
pub const VLF_THRESHOLD: f64 = 4.0;

/// Quadrature pair of inequality `i` (zero-based, `i < N - 1`):
/// `x_i - x_{i+1}` and `y_i + y_{i+1} + sum_{k != i, i+1} G_k y_k`.
pub fn vlf_combinations(
    theta: &[f64],
    gains: &[f64],
    i: usize,
) -> Result<(QuadratureCombination, QuadratureCombination)> {
    let n = theta.len();
    if gains.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gains.len(),
        });
    }
    if i + 1 >= n {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: n.saturating_sub(1),
        });
    }
    let mut cx = vec![0.0; 2 * n];
    cx[i] = 1.0;
    cx[i + 1] = -1.0;
    let mut cy = vec![0.0; 2 * n];
    for (k, g) in gains.iter().enumerate() {
        cy[n + k] = if k == i || k == i + 1 { 1.0 } else { *g };
    }
    Ok((
        QuadratureCombination::new(cx, theta.to_vec())?,
        QuadratureCombination::new(cy, theta.to_vec())?,
    ))
}

/// `rho_i = V[x_i(theta_i) - x_{i+1}(theta_{i+1})] + V[y_i + y_{i+1} + sum G_k y_k]`.
/// Full inseparability needs every `rho_i < 4`.
pub fn vlf_rho(state: &GaussianState, theta: &[f64], gains: &[f64], i: usize) -> Result<f64> {
    let (a, b) = vlf_combinations(theta, gains, i)?;
    Ok(combination_variance(state, &a)? + combination_variance(state, &b)?)
}

/// All `N - 1` values of [`vlf_rho`].
pub fn vlf_all(state: &GaussianState, theta: &[f64], gains: &[f64]) -> Result<Vec<f64>> {
    (0..state.n_modes().saturating_sub(1))
        .map(|i| vlf_rho(state, theta, gains, i))
        .collect()
}

/// One inseparability condition evaluated on a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub nodes: (usize, usize),
    pub sum: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub graph: GraphPreset,
    pub theta: Vec<f64>,
    pub gains: Vec<f64>,
    /// `V(d_i)` per node; vacuum gives 1.
    pub nullifier_variances: Vec<f64>,
    pub vlf_rho: Vec<f64>,
    pub bounds: Vec<BoundCheck>,
    pub below_shot_noise: bool,
    pub fully_inseparable: bool,
    pub passed: bool,
}

/// Normalized nullifier variances of `graph` at LO phases `theta`.
pub fn nullifier_variances(
    state: &GaussianState,
    graph: &GraphSpec,
    theta: &[f64],
) -> Result<Vec<f64>> {
    if graph.n() != state.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: state.n_modes(),
            got: graph.n(),
        });
    }
    nullifiers_for(graph, theta)?
        .iter()
        .map(|c| combination_variance(state, c))
        .collect()
}

/// [`certify_with`] using the preset's bounds and zero VLF gains.
pub fn certify(
    state: &GaussianState,
    graph: &GraphSpec,
    theta: &[f64],
) -> Result<CertificationReport> {
    certify_with(state, graph, theta, &vec![0.0; theta.len()], None)
}

/// Certifies a cluster state: every normalized nullifier below shot noise
/// and every inseparability sum below its bound. `bounds` overrides the
/// preset table and is required for custom graphs. `gains` only affects the
/// reported VLF values.
pub fn certify_with(
    state: &GaussianState,
    graph: &GraphSpec,
    theta: &[f64],
    gains: &[f64],
    bounds: Option<&[InseparabilityBound]>,
) -> Result<CertificationReport> {
    let table = match bounds {
        Some(b) => b.to_vec(),
        None => preset_bounds(graph.preset_kind()).ok_or_else(|| {
            Error::MissingBounds(format!(
                "graph `{}` has no inseparability bounds",
                graph.preset_kind()
            ))
        })?,
    };
    let variances = nullifier_variances(state, graph, theta)?;
    let mut checks = Vec::with_capacity(table.len());
    for b in &table {
        let (p, q) = b.nodes;
        if p >= graph.n() || q >= graph.n() {
            return Err(Error::IndexOutOfRange {
                index: p.max(q),
                len: graph.n(),
            });
        }
        let sum = variances[p] + variances[q];
        checks.push(BoundCheck {
            nodes: b.nodes,
            sum,
            bound: b.bound,
            violated: sum < b.bound,
        });
    }
    let below_shot_noise = variances.iter().all(|&v| v < 1.0);
    let fully_inseparable = checks.iter().all(|c| c.violated);
    Ok(CertificationReport {
        graph: graph.preset_kind(),
        theta: theta.to_vec(),
        gains: gains.to_vec(),
        vlf_rho: vlf_all(state, theta, gains)?,
        nullifier_variances: variances,
        bounds: checks,
        below_shot_noise,
        fully_inseparable,
        passed: below_shot_noise && fully_inseparable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Basis;

    #[test]
    fn vacuum_baseline() {
        let vac = GaussianState::vacuum(5, Basis::Individual);
        for p in GraphPreset::NAMED {
            let g = GraphSpec::preset(p).unwrap();
            let r = certify(&vac, &g, &[0.3, -0.2, 1.0, 0.0, 2.0]).unwrap();
            assert!(
                r.nullifier_variances
                    .iter()
                    .all(|v| (v - 1.0).abs() < 1e-14),
                "{p}"
            );
            assert!(r.vlf_rho.iter().all(|&v| (v - 4.0).abs() < 1e-14));
            assert!(!r.passed && !r.below_shot_noise && !r.fully_inseparable);
        }
    }

    #[test]
    fn custom_graph_needs_bounds() {
        let vac = GaussianState::vacuum(3, Basis::Individual);
        let g = GraphSpec::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(
            certify(&vac, &g, &[0.0; 3]),
            Err(Error::MissingBounds(_))
        ));
        let b = [InseparabilityBound {
            nodes: (0, 1),
            bound: 1.5,
        }];
        let r = certify_with(&vac, &g, &[0.0; 3], &[0.0; 3], Some(&b)).unwrap();
        assert_eq!(r.bounds.len(), 1);
        assert!(!r.bounds[0].violated);
    }

    #[test]
    fn vlf_index_checked() {
        let vac = GaussianState::vacuum(3, Basis::Individual);
        assert!(vlf_rho(&vac, &[0.0; 3], &[0.0; 3], 2).is_err());
        let v = vlf_rho(&vac, &[0.0; 3], &[0.0, 0.0, 2.0], 0).unwrap();
        assert!((v - 8.0).abs() < 1e-14);
    }
}

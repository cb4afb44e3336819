use std::f64::consts::{FRAC_PI_2, PI};

use super::graph::{nullifiers_for, GraphSpec};
use crate::linalg::RealMatrix;
use crate::model::GaussianState;
use crate::{Error, Result};

/// The nullifier sum `sum_i V(d_i)` as a quadratic form `v^T H v` in
/// `v = (cos theta_1, sin theta_1, ..., cos theta_N, sin theta_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullifierForm {
    pub h: RealMatrix,
}

impl NullifierForm {
    pub fn n_modes(&self) -> usize {
        self.h.nrows() / 2
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let v = phase_vector(theta);
        v.dot(&(&self.h * &v))
    }

    /// Exact coordinate descent: each sweep sets every `theta_j` in turn to
    /// the global minimizer of the sum with the others held fixed. Returns
    /// the final sum.
    pub fn descend(&self, theta: &mut [f64], max_sweeps: usize) -> f64 {
        let n = self.n_modes();
        let mut v = phase_vector(theta);
        let mut current = v.dot(&(&self.h * &v));
        for _ in 0..max_sweeps {
            let start = current;
            for j in 0..n {
                let (a, b, d) = (
                    self.h[(2 * j, 2 * j)],
                    self.h[(2 * j, 2 * j + 1)],
                    self.h[(2 * j + 1, 2 * j + 1)],
                );
                let mut g1 = 0.0;
                let mut g2 = 0.0;
                for m in (0..2 * n).filter(|&m| m / 2 != j) {
                    g1 += self.h[(2 * j, m)] * v[m];
                    g2 += self.h[(2 * j + 1, m)] * v[m];
                }
                let t = minimize_trig(a, b, d, g1, g2, theta[j]);
                theta[j] = t;
                v[2 * j] = t.cos();
                v[2 * j + 1] = t.sin();
            }
            current = v.dot(&(&self.h * &v));
            if start - current <= 1e-10 * start.abs().max(1.0) {
                break;
            }
        }
        current
    }
}

fn phase_vector(theta: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(
        2 * theta.len(),
        theta.iter().flat_map(|t| [t.cos(), t.sin()]),
    )
}

/// Global minimizer over `t` of `a c^2 + 2 b c s + d s^2 + 2 g1 c + 2 g2 s`
/// with `c = cos t`, `s = sin t`; `current` is kept on ties.
fn minimize_trig(a: f64, b: f64, d: f64, g1: f64, g2: f64, current: f64) -> f64 {
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        a * c * c + 2.0 * b * c * s + d * s * s + 2.0 * g1 * c + 2.0 * g2 * s
    };
    const SAMPLES: usize = 8;
    let mut best = (current, f(current));
    for k in 0..SAMPLES {
        let mut t = -PI + 2.0 * PI * k as f64 / SAMPLES as f64;
        for _ in 0..8 {
            let (s2, c2) = (2.0 * t).sin_cos();
            let (s, c) = t.sin_cos();
            let d1 = (d - a) * s2 + 2.0 * b * c2 - 2.0 * g1 * s + 2.0 * g2 * c;
            let d2 = 2.0 * (d - a) * c2 - 4.0 * b * s2 - 2.0 * g1 * c - 2.0 * g2 * s;
            if d2 <= 0.0 {
                break;
            }
            let step = d1 / d2;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    best.0
}

/// Builds the [`NullifierForm`] of `graph` on `state`.
pub fn nullifier_form(state: &GaussianState, graph: &GraphSpec) -> Result<NullifierForm> {
    let n = graph.n();
    if n != state.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: state.n_modes(),
            got: n,
        });
    }
    let at_zero = nullifiers_for(graph, &vec![0.0; n])?;
    let at_quarter = nullifiers_for(graph, &vec![FRAC_PI_2; n])?;
    let mut h = RealMatrix::zeros(2 * n, 2 * n);
    for (z, q) in at_zero.iter().zip(&at_quarter) {
        // column 2j: mode-j part of the raw coefficients at theta_j = 0,
        // column 2j + 1: the same at theta_j = pi/2
        let (wz, wq) = (z.raw_coefficients(), q.raw_coefficients());
        let mut b = RealMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            b[(j, 2 * j)] = wz[j];
            b[(n + j, 2 * j)] = wz[n + j];
            b[(j, 2 * j + 1)] = wq[j];
            b[(n + j, 2 * j + 1)] = wq[n + j];
        }
        h += b.transpose() * &state.covariance * b;
    }
    Ok(NullifierForm { h })
}

/// LO phases minimizing the nullifier sum, by [`NullifierForm::descend`]
/// from `theta`. Returns the sum.
pub fn optimize_lo_phases(
    state: &GaussianState,
    graph: &GraphSpec,
    theta: &mut [f64],
) -> Result<f64> {
    if theta.len() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            got: theta.len(),
        });
    }
    Ok(nullifier_form(state, graph)?.descend(theta, 20))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{nullifier_variances, GraphPreset};
    use crate::model::{propagator_exact, ArrayConfig, PumpProfile};

    fn state() -> GaussianState {
        let cfg = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let pump = PumpProfile::new(
            vec![0.03, 0.05, 0.02, 0.04, 0.01],
            vec![0.3, -1.0, 2.0, 0.1, -2.5],
        );
        propagator_exact(&cfg, &pump, 30.0).unwrap()
    }

    #[test]
    fn form_matches_direct_sum() {
        let st = state();
        for p in GraphPreset::NAMED {
            let g = GraphSpec::preset(p).unwrap();
            let form = nullifier_form(&st, &g).unwrap();
            let theta = [0.4, -1.2, 2.9, 0.0, -0.7];
            let direct: f64 = nullifier_variances(&st, &g, &theta).unwrap().iter().sum();
            assert!((form.value(&theta) - direct).abs() < 1e-10 * direct, "{p}");
        }
    }

    #[test]
    fn descent_is_monotone_and_stationary() {
        let st = state();
        let g = GraphSpec::preset(GraphPreset::Pentagon).unwrap();
        let form = nullifier_form(&st, &g).unwrap();
        let mut theta = [0.0; 5];
        let before = form.value(&theta);
        let after = form.descend(&mut theta, 200);
        assert!(after <= before);
        for j in 0..5 {
            for delta in [-1e-4, 1e-4, 1.0, -2.0] {
                let mut t = theta;
                t[j] += delta;
                assert!(form.value(&t) >= after - 1e-9 * after);
            }
        }
    }

    #[test]
    fn trig_minimizer_is_global() {
        let (a, b, d, g1, g2) = (2.0, -0.7, 0.5, 0.3, -1.1);
        let t = minimize_trig(a, b, d, g1, g2, 0.0);
        let f = |t: f64| {
            a * t.cos().powi(2)
                + 2.0 * b * t.cos() * t.sin()
                + d * t.sin().powi(2)
                + 2.0 * g1 * t.cos()
                + 2.0 * g2 * t.sin()
        };
        let brute = (0..100_000)
            .map(|k| f(-PI + 2.0 * PI * k as f64 / 100_000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(f(t) <= brute + 1e-12);
    }
}

use std::f64::consts::PI;

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use super::es::{minimize, Coordinate, EsConfig, OptimizationResult};
use crate::entanglement::{
    cluster_transform, emulation_error_from, nullifier_variances, optimize_lo_phases, s_lo_from,
    vlf_all, ClusterTransform, GraphSpec,
};
use crate::linalg::{
    bloch_messiah, euler_angle_count, euler_angles_of, euler_orthogonal, RealMatrix,
};
use crate::model::{propagator_exact, ArrayConfig, GaussianState, PumpProfile};
use crate::{Error, Result};

/// Maps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `F_M = sum_i rho_i`.
pub fn fitness_fm(state: &GaussianState, theta: &[f64], gains: &[f64]) -> Result<f64> {
    Ok(vlf_all(state, theta, gains)?.iter().sum())
}

/// `F_C = sum_i V(d_i)` on the individual-basis state at `z`.
pub fn fitness_fc(
    cfg: &ArrayConfig,
    z: f64,
    graph: &GraphSpec,
    pump: &PumpProfile,
    theta: &[f64],
) -> Result<f64> {
    let state = propagator_exact(cfg, pump, z)?;
    Ok(nullifier_variances(&state, graph, theta)?.iter().sum())
}

/// `F_P = || S_C O R_1^T - O_post D_LO(theta) ||_F`.
pub fn fitness_fp(
    cfg: &ArrayConfig,
    z: f64,
    graph: &GraphSpec,
    pump: &PumpProfile,
    euler: &[f64],
    theta: &[f64],
    post: &[f64],
) -> Result<f64> {
    let state = propagator_exact(cfg, pump, z)?;
    let bm = bloch_messiah(&state.propagator)?;
    let s = s_lo_from(&cluster_transform(graph)?, &bm.passive, euler)?;
    emulation_error_from(&s, theta, post)
}

/// Lowers `|| s_lo - diag(O_post, O_post) D_LO(theta) ||_F` by alternating
/// the closed-form optimum over each LO phase with the orthogonal
/// Procrustes solution for `O_post`. Never increases the error.
pub fn refine_detection(
    s_lo: &RealMatrix,
    theta: &mut [f64],
    post: &mut [f64],
    sweeps: usize,
) -> Result<()> {
    let n = theta.len();
    if s_lo.nrows() != 2 * n || post.len() != euler_angle_count(n) {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: s_lo.nrows(),
        });
    }
    let error = |theta: &[f64], post: &[f64]| {
        emulation_error_from(
            &crate::linalg::SymplecticMatrix::new_unchecked(s_lo.clone()),
            theta,
            post,
        )
    };
    for _ in 0..sweeps {
        let before = error(theta, post)?;
        let o = euler_orthogonal(post, n)?;
        let mut new_theta = theta.to_vec();
        // N = diag(O, O)^T S; theta_i maximizes tr(D^T N)
        let mut nm = RealMatrix::zeros(2 * n, 2 * n);
        let ot = o.transpose();
        nm.view_mut((0, 0), (n, 2 * n))
            .copy_from(&(&ot * s_lo.rows(0, n)));
        nm.view_mut((n, 0), (n, 2 * n))
            .copy_from(&(&ot * s_lo.rows(n, n)));
        for i in 0..n {
            new_theta[i] = (nm[(i, n + i)] - nm[(n + i, i)]).atan2(nm[(i, i)] + nm[(n + i, n + i)]);
        }
        // M = S D^T; O_post maximizes tr(O^T (M11 + M22)) over SO(n)
        let d = crate::linalg::d_lo(&new_theta);
        let m = s_lo * d.matrix().transpose();
        let a = m.view((0, 0), (n, n)) + m.view((n, n), (n, n));
        let svd = SVD::new(a, true, true);
        let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
            return Ok(());
        };
        let mut fix = RealMatrix::identity(n, n);
        if (&u * &vt).determinant() < 0.0 {
            // drop the smallest singular direction
            let k = (0..n)
                .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
                .unwrap_or(n - 1);
            fix[(k, k)] = -1.0;
        }
        let new_post = euler_angles_of(&(u * fix * vt))?;
        if error(&new_theta, &new_post)? < before {
            theta.copy_from_slice(&new_theta);
            post.copy_from_slice(&new_post);
        } else {
            break;
        }
    }
    Ok(())
}

/// Which fitness to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessKind {
    /// `F_M(theta, G)` at a fixed pump.
    Vlf,
    /// `F_M(phi, theta, G)`: relative pump phases join the search, `phi_1 = 0`.
    VlfWithPhases,
    /// `F_C(eta, phi, theta)`.
    Cluster,
    /// `F_P(eta, phi, euler, theta, post)`.
    Emulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    /// Upper pump amplitude, mm^-1.
    pub eta_max: f64,
    pub gain_min: f64,
    pub gain_max: f64,
}

impl Default for ParameterBounds {
    fn default() -> Self {
        Self {
            eta_max: 0.1,
            gain_min: 0.0,
            gain_max: 10.0,
        }
    }
}

/// Physical parameters decoded from a genotype. Unused groups are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub pump: PumpProfile,
    pub theta: Vec<f64>,
    pub gains: Vec<f64>,
    pub euler: Vec<f64>,
    pub post: Vec<f64>,
}

/// Genotype layouts (amplitudes in units of `eta_max`):
/// - `Vlf`: `theta (N), G (N)`
/// - `VlfWithPhases`: `phi_2..phi_N (N-1), theta (N), G (N)`
/// - `Cluster`: `eta (N), phi (N), theta (N)`
/// - `Emulation`: `eta (N), phi (N), euler (K), theta (N), post (K)`, `K = N(N-1)/2`
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub kind: FitnessKind,
    pub array: ArrayConfig,
    pub z: f64,
    /// Pump of the VLF problems; its phases are ignored by `VlfWithPhases`.
    pub pump: PumpProfile,
    pub graph: Option<GraphSpec>,
    pub bounds: ParameterBounds,
    /// Solve the detection parameters of each candidate in closed form:
    /// [`optimize_lo_phases`] for `Cluster`, [`refine_detection`] for
    /// `Emulation`. The solved values are written back into the genotype.
    pub local_search: bool,
    /// Start the first `Cluster` run from the best flat pump, see
    /// [`Self::flat_start`].
    pub warm_start: bool,
    cluster: Option<ClusterTransform>,
}

impl OptimizationProblem {
    fn new(
        kind: FitnessKind,
        array: ArrayConfig,
        z: f64,
        pump: PumpProfile,
        graph: Option<GraphSpec>,
    ) -> Result<Self> {
        array.validate()?;
        pump.validate(array.n)?;
        if let Some(g) = &graph {
            if g.n() != array.n {
                return Err(Error::DimensionMismatch {
                    expected: array.n,
                    got: g.n(),
                });
            }
        }
        let cluster = match (kind, &graph) {
            (FitnessKind::Emulation, Some(g)) => Some(cluster_transform(g)?),
            _ => None,
        };
        Ok(Self {
            kind,
            array,
            z,
            pump,
            graph,
            bounds: ParameterBounds::default(),
            local_search: true,
            warm_start: true,
            cluster,
        })
    }

    pub fn vlf(array: ArrayConfig, z: f64, pump: PumpProfile) -> Result<Self> {
        Self::new(FitnessKind::Vlf, array, z, pump, None)
    }

    pub fn vlf_with_phases(array: ArrayConfig, z: f64, amplitudes: Vec<f64>) -> Result<Self> {
        let n = amplitudes.len();
        Self::new(
            FitnessKind::VlfWithPhases,
            array,
            z,
            PumpProfile::new(amplitudes, vec![0.0; n]),
            None,
        )
    }

    pub fn cluster(array: ArrayConfig, z: f64, graph: GraphSpec) -> Result<Self> {
        let n = array.n;
        Self::new(
            FitnessKind::Cluster,
            array,
            z,
            PumpProfile::zero(n),
            Some(graph),
        )
    }

    pub fn emulation(array: ArrayConfig, z: f64, graph: GraphSpec) -> Result<Self> {
        let n = array.n;
        Self::new(
            FitnessKind::Emulation,
            array,
            z,
            PumpProfile::zero(n),
            Some(graph),
        )
    }

    pub fn with_bounds(mut self, bounds: ParameterBounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn n(&self) -> usize {
        self.array.n
    }

    pub fn dimension(&self) -> usize {
        let n = self.n();
        let k = euler_angle_count(n);
        match self.kind {
            FitnessKind::Vlf => 2 * n,
            FitnessKind::VlfWithPhases => 3 * n - 1,
            FitnessKind::Cluster => 3 * n,
            FitnessKind::Emulation => 3 * n + 2 * k,
        }
    }

    pub fn space(&self) -> Vec<Coordinate> {
        let n = self.n();
        let k = euler_angle_count(n);
        let amp = Coordinate::Bounded { lo: 0.0, hi: 1.0 };
        let gain = Coordinate::Bounded {
            lo: self.bounds.gain_min,
            hi: self.bounds.gain_max,
        };
        let angle = Coordinate::Periodic;
        let rep = |c: Coordinate, m: usize| std::iter::repeat_n(c, m);
        match self.kind {
            FitnessKind::Vlf => rep(angle, n).chain(rep(gain, n)).collect(),
            FitnessKind::VlfWithPhases => rep(angle, 2 * n - 1).chain(rep(gain, n)).collect(),
            FitnessKind::Cluster => rep(amp, n).chain(rep(angle, 2 * n)).collect(),
            FitnessKind::Emulation => rep(amp, n).chain(rep(angle, 2 * n + 2 * k)).collect(),
        }
    }

    fn graph(&self) -> Result<&GraphSpec> {
        self.graph
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("this fitness needs a graph".into()))
    }

    /// Physical parameters of a genotype; angles wrapped to `(-pi, pi]`.
    pub fn decode(&self, x: &[f64]) -> Result<ParameterSet> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let n = self.n();
        let k = euler_angle_count(n);
        let wrap = |s: &[f64]| s.iter().map(|&a| wrap_angle(a)).collect::<Vec<_>>();
        let amps = |s: &[f64]| {
            s.iter()
                .map(|u| u.clamp(0.0, 1.0) * self.bounds.eta_max)
                .collect::<Vec<_>>()
        };
        let clip_gains = |s: &[f64]| {
            s.iter()
                .map(|g| g.clamp(self.bounds.gain_min, self.bounds.gain_max))
                .collect::<Vec<_>>()
        };
        let empty = Vec::new;
        Ok(match self.kind {
            FitnessKind::Vlf => ParameterSet {
                pump: self.pump.clone(),
                theta: wrap(&x[..n]),
                gains: clip_gains(&x[n..]),
                euler: empty(),
                post: empty(),
            },
            FitnessKind::VlfWithPhases => {
                let mut phases = vec![0.0];
                phases.extend(wrap(&x[..n - 1]));
                ParameterSet {
                    pump: PumpProfile::new(self.pump.amplitudes.clone(), phases),
                    theta: wrap(&x[n - 1..2 * n - 1]),
                    gains: clip_gains(&x[2 * n - 1..]),
                    euler: empty(),
                    post: empty(),
                }
            }
            FitnessKind::Cluster => ParameterSet {
                pump: PumpProfile::new(amps(&x[..n]), wrap(&x[n..2 * n])),
                theta: wrap(&x[2 * n..]),
                gains: empty(),
                euler: empty(),
                post: empty(),
            },
            FitnessKind::Emulation => ParameterSet {
                pump: PumpProfile::new(amps(&x[..n]), wrap(&x[n..2 * n])),
                euler: wrap(&x[2 * n..2 * n + k]),
                theta: wrap(&x[2 * n + k..3 * n + k]),
                post: wrap(&x[3 * n + k..]),
                gains: empty(),
            },
        })
    }

    /// Fitness of a genotype.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let p = self.decode(x)?;
        match self.kind {
            FitnessKind::Vlf | FitnessKind::VlfWithPhases => {
                let state = propagator_exact(&self.array, &p.pump, self.z)?;
                fitness_fm(&state, &p.theta, &p.gains)
            }
            FitnessKind::Cluster => {
                fitness_fc(&self.array, self.z, self.graph()?, &p.pump, &p.theta)
            }
            FitnessKind::Emulation => {
                let state = propagator_exact(&self.array, &p.pump, self.z)?;
                let bm = bloch_messiah(&state.propagator)?;
                let cluster = match &self.cluster {
                    Some(c) => c.clone(),
                    None => cluster_transform(self.graph()?)?,
                };
                emulation_error_from(
                    &s_lo_from(&cluster, &bm.passive, &p.euler)?,
                    &p.theta,
                    &p.post,
                )
            }
        }
    }

    /// Best `Cluster` genotype among flat pumps (equal amplitudes on a uniform
    /// grid of `points` values over the bounds, zero phases) after the
    /// detection solve. `None` for the other fitness kinds.
    pub fn flat_start(&self, points: usize) -> Result<Option<Vec<f64>>> {
        if self.kind != FitnessKind::Cluster || points == 0 {
            return Ok(None);
        }
        let n = self.n();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 1..=points {
            let mut x = vec![0.0; self.dimension()];
            x[..n].fill(i as f64 / points as f64);
            let f = self.evaluate_mut(&mut x);
            if best.as_ref().is_none_or(|(b, _)| f < *b) {
                best = Some((f, x));
            }
        }
        Ok(best.map(|(_, x)| x))
    }

    /// Evaluation used inside the search; may improve `x` in place.
    fn evaluate_mut(&self, x: &mut [f64]) -> f64 {
        if self.local_search {
            let solved = match self.kind {
                FitnessKind::Cluster => self.refine_cluster(x),
                FitnessKind::Emulation => self.refine_emulation(x),
                _ => Err(Error::NonFinite),
            };
            if let Ok(f) = solved {
                return f;
            }
        }
        self.evaluate(x).unwrap_or(f64::INFINITY)
    }

    fn refine_cluster(&self, x: &mut [f64]) -> Result<f64> {
        let n = self.n();
        let p = self.decode(x)?;
        let state = propagator_exact(&self.array, &p.pump, self.z)?;
        let mut theta = p.theta;
        let f = optimize_lo_phases(&state, self.graph()?, &mut theta)?;
        x[2 * n..].copy_from_slice(&theta);
        Ok(f)
    }

    fn refine_emulation(&self, x: &mut [f64]) -> Result<f64> {
        let n = self.n();
        let k = euler_angle_count(n);
        let p = self.decode(x)?;
        let state = propagator_exact(&self.array, &p.pump, self.z)?;
        let bm = bloch_messiah(&state.propagator)?;
        let cluster = self
            .cluster
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("missing cluster".into()))?;
        let s = s_lo_from(cluster, &bm.passive, &p.euler)?;
        let mut theta = p.theta.clone();
        let mut post = p.post.clone();
        refine_detection(s.matrix(), &mut theta, &mut post, 4)?;
        x[2 * n + k..3 * n + k].copy_from_slice(&theta);
        x[3 * n + k..].copy_from_slice(&post);
        emulation_error_from(&s, &theta, &post)
    }

    /// Genotype of a parameter set, the inverse of [`decode`](Self::decode).
    pub fn encode(&self, p: &ParameterSet) -> Result<Vec<f64>> {
        let n = self.n();
        let amps = || p.pump.amplitudes.iter().map(|a| a / self.bounds.eta_max);
        let x: Vec<f64> = match self.kind {
            FitnessKind::Vlf => p.theta.iter().chain(&p.gains).copied().collect(),
            FitnessKind::VlfWithPhases => p.pump.phases[1..]
                .iter()
                .map(|v| v - p.pump.phases[0])
                .chain(p.theta.iter().chain(&p.gains).copied())
                .collect(),
            FitnessKind::Cluster => amps()
                .chain(p.pump.phases.iter().chain(&p.theta).copied())
                .collect(),
            FitnessKind::Emulation => amps()
                .chain(
                    p.pump
                        .phases
                        .iter()
                        .chain(&p.euler)
                        .chain(&p.theta)
                        .chain(&p.post)
                        .copied(),
                )
                .collect(),
        };
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let _ = n;
        Ok(x)
    }
}

/// Runs the ES on `problem`. With `warm_start` the first `Cluster` run begins
/// at [`OptimizationProblem::flat_start`]; restarts begin at random points.
pub fn evolve(problem: &OptimizationProblem, config: &EsConfig) -> Result<OptimizationResult> {
    let x0 = if problem.warm_start {
        problem.flat_start(FLAT_SCAN_POINTS)?
    } else {
        None
    };
    let mut result = minimize(
        |x| problem.evaluate_mut(x),
        &problem.space(),
        x0.as_deref(),
        config,
    )?;
    if x0.is_some() {
        result.evaluations += FLAT_SCAN_POINTS;
    }
    Ok(result)
}

const FLAT_SCAN_POINTS: usize = 21;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::GraphPreset;
    use crate::model::Basis;

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert_eq!(wrap_angle(0.3), 0.3);
    }

    #[test]
    fn parameter_counts() {
        let a = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let g = GraphSpec::preset(GraphPreset::Linear).unwrap();
        assert_eq!(
            OptimizationProblem::vlf(a.clone(), 30.0, PumpProfile::flat(5, 0.015, 0.0))
                .unwrap()
                .dimension(),
            10
        );
        assert_eq!(
            OptimizationProblem::vlf_with_phases(a.clone(), 30.0, vec![0.015; 5])
                .unwrap()
                .dimension(),
            14
        );
        assert_eq!(
            OptimizationProblem::cluster(a.clone(), 30.0, g.clone())
                .unwrap()
                .dimension(),
            15
        );
        assert_eq!(
            OptimizationProblem::emulation(a, 30.0, g)
                .unwrap()
                .dimension(),
            35
        );
    }

    #[test]
    fn baselines() {
        let a = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let vac = GaussianState::vacuum(5, Basis::Individual);
        assert!((fitness_fm(&vac, &[0.0; 5], &[0.0; 5]).unwrap() - 16.0).abs() < 1e-14);
        let g = GraphSpec::preset(GraphPreset::Star).unwrap();
        assert!(
            (fitness_fc(&a, 30.0, &g, &PumpProfile::zero(5), &[0.4; 5]).unwrap() - 5.0).abs()
                < 1e-12
        );
        let fp = fitness_fp(
            &a,
            30.0,
            &g,
            &PumpProfile::flat(5, 0.02, 0.3),
            &[0.1; 10],
            &[0.2; 5],
            &[0.3; 10],
        )
        .unwrap();
        assert!(fp >= 0.0);
    }

    #[test]
    fn encode_decode_round_trip() {
        let a = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let g = GraphSpec::preset(GraphPreset::Pentagon).unwrap();
        let prob = OptimizationProblem::emulation(a, 30.0, g).unwrap();
        let x: Vec<f64> = (0..35)
            .map(|i| {
                if i < 5 {
                    0.1 * i as f64
                } else {
                    0.37 * i as f64 - 6.0
                }
            })
            .collect();
        let p = prob.decode(&x).unwrap();
        let y = prob.encode(&p).unwrap();
        assert_eq!(prob.evaluate(&x).unwrap(), prob.evaluate(&y).unwrap());
    }

    #[test]
    fn refinement_never_hurts() {
        let a = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let g = GraphSpec::preset(GraphPreset::Linear).unwrap();
        let prob = OptimizationProblem::emulation(a, 30.0, g).unwrap();
        let mut x: Vec<f64> = (0..35)
            .map(|i| ((i * 7919) % 13) as f64 * 0.3 - 1.5)
            .collect();
        x[..5].copy_from_slice(&[0.4, 0.2, 0.3, 0.1, 0.1]);
        let before = prob.evaluate(&x).unwrap();
        let after = prob.evaluate_mut(&mut x);
        assert!(after <= before);
        assert!((prob.evaluate(&x).unwrap() - after).abs() < 1e-12);
    }

    #[test]
    fn flat_start_scans_uniform_pumps() {
        let a = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let vlf =
            OptimizationProblem::vlf(a.clone(), 30.0, PumpProfile::flat(5, 0.015, 0.0)).unwrap();
        assert!(vlf.flat_start(11).unwrap().is_none());
        let g = GraphSpec::preset(GraphPreset::Linear).unwrap();
        let emu = OptimizationProblem::emulation(a.clone(), 30.0, g.clone()).unwrap();
        assert!(emu.flat_start(11).unwrap().is_none());
        let prob = OptimizationProblem::cluster(a, 30.0, g).unwrap();
        let x = prob.flat_start(11).unwrap().unwrap();
        assert!(x[..5].iter().all(|&u| u == x[0]) && x[0] > 0.0);
        assert!(x[5..10].iter().all(|&p| p == 0.0));
        let f = prob.evaluate(&x).unwrap();
        for i in 1..=11 {
            let mut y = vec![0.0; 15];
            y[..5].fill(i as f64 / 11.0);
            assert!(f <= prob.evaluate(&y).unwrap() + 1e-12);
        }
        let es = EsConfig {
            max_generations: 3,
            population: 8,
            parents: 2,
            ..EsConfig::default()
        };
        let x = prob.flat_start(FLAT_SCAN_POINTS).unwrap().unwrap();
        let f = prob.evaluate(&x).unwrap();
        assert!(evolve(&prob, &es).unwrap().best_fitness <= f + 1e-12);
    }
}

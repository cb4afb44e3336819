use std::f64::consts::{FRAC_PI_2, PI};

use anw_core::entanglement::{
    certify, cluster_transform, nullifier_form, nullifier_variances, vlf_all, GraphPreset,
    GraphSpec,
};
use anw_core::linalg::{
    bloch_messiah, block_diag2, d_lo, euler_orthogonal, mat_exp, max_abs, omega, symplectic_defect,
    takagi, ComplexMatrix, RealMatrix, SymplecticMatrix,
};
use anw_core::measurement::change_basis;
use anw_core::model::{
    linear_supermodes, propagator_exact, propagator_no_ordering, supermode_rotation, ArrayConfig,
    Basis, GaussianState, PumpProfile,
};
use anw_core::optimizer::{
    fitness_fc, fitness_fp, minimize, Coordinate, EsConfig, OptimizationProblem,
};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;

fn array() -> impl Strategy<Value = ArrayConfig> {
    (1usize..=8, 0.0f64..0.75).prop_flat_map(|(n, c)| {
        vec(0.5f64..1.5, n - 1).prop_map(move |f| ArrayConfig {
            n,
            coupling_strength: c,
            coupling_profile: f,
            length: 50.0,
        })
    })
}

fn pump(n: usize) -> impl Strategy<Value = PumpProfile> {
    (vec(0.0f64..0.1, n), vec(-PI..PI, n)).prop_map(|(a, p)| PumpProfile::new(a, p))
}

fn scenario() -> impl Strategy<Value = (ArrayConfig, PumpProfile, f64)> {
    array().prop_flat_map(|cfg| {
        let n = cfg.n;
        (Just(cfg), pump(n), 0.0f64..50.0)
    })
}

fn five_mode_state() -> impl Strategy<Value = GaussianState> {
    (pump(5), 0.0f64..30.0).prop_map(|(p, z)| {
        propagator_exact(&ArrayConfig::homogeneous(5, 0.24, 30.0), &p, z).unwrap()
    })
}

fn complex_symmetric(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
        let g = ComplexMatrix::from_fn(n, n, |i, j| {
            Complex64::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1])
        });
        &g + g.transpose()
    })
}

/// `1e-10`, or a few ulps of `S Omega S^T` when its entries are too large
/// for that to be expressible in `f64`.
fn representable(s: &RealMatrix) -> f64 {
    1e-10f64.max(8.0 * f64::EPSILON * max_abs(s).powi(2))
}

fn photons(v: &RealMatrix) -> f64 {
    (v.trace() - v.nrows() as f64) / 4.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagators_are_symplectic_with_unit_determinant((cfg, p, z) in scenario()) {
        let exact = propagator_exact(&cfg, &p, z).unwrap();
        let no = propagator_no_ordering(&cfg, &p, z).unwrap();
        for s in [&exact.propagator, &no.propagator] {
            prop_assert!(s.defect() < representable(s.matrix()), "defect {:.2e}", s.defect());
            let det = s.matrix().clone().determinant();
            prop_assert!((det - 1.0).abs() < 1e-9f64.max(representable(s.matrix())), "det {det}");
        }
        prop_assert!(max_abs(&(&exact.covariance - exact.propagator.covariance())) < 1e-12 * max_abs(&exact.covariance));
    }

    #[test]
    fn takagi_diagonalizes(w in (1usize..=16).prop_flat_map(complex_symmetric)) {
        let f = takagi(&w).unwrap();
        let n = w.nrows();
        let d = &f.unitary * &w * f.unitary.transpose();
        let target = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            n,
            f.diagonal.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        prop_assert!((d - target).iter().all(|e| e.norm() < 1e-10));
        prop_assert!(f.diagonal.windows(2).all(|p| p[0] >= p[1]));
        prop_assert!(f.diagonal.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn bloch_messiah_round_trip((cfg, p, z) in scenario()) {
        let s = propagator_exact(&cfg, &p, z).unwrap().propagator;
        let bm = bloch_messiah(&s).unwrap();
        let r = bm.passive.matrix();
        let v = s.covariance();
        let err = max_abs(&(r * bm.k2() * r.transpose() - &v));
        prop_assert!(err < 1e-9 * max_abs(&v).max(1.0));
    }

    #[test]
    fn commuting_exponentials_multiply(a in vec(-2.0f64..2.0, 6), b in vec(-2.0f64..2.0, 6)) {
        let da = RealMatrix::from_diagonal(&DVector::from_vec(a));
        let db = RealMatrix::from_diagonal(&DVector::from_vec(b));
        let lhs = mat_exp(&(&da + &db)).unwrap();
        let rhs = mat_exp(&da).unwrap() * mat_exp(&db).unwrap();
        prop_assert!(max_abs(&(&lhs - rhs)) < 1e-12 * max_abs(&lhs));
    }

    #[test]
    fn passive_basis_changes_preserve_photons(state in five_mode_state(), angles in vec(-PI..PI, 10), theta in vec(-PI..PI, 5)) {
        let before = photons(&state.covariance);
        let o = SymplecticMatrix::new(block_diag2(&euler_orthogonal(&angles, 5).unwrap())).unwrap();
        let modes = supermode_rotation(&linear_supermodes(&ArrayConfig::homogeneous(5, 0.24, 30.0)).unwrap());
        for t in [o, d_lo(&theta), modes] {
            let moved = change_basis(&state, &t, Basis::LinearSupermode).unwrap();
            prop_assert!(symplectic_defect(moved.propagator.matrix()) < 1e-10);
            prop_assert!((photons(&moved.covariance) - before).abs() < 1e-10 * before.max(1.0));
        }
    }

    #[test]
    fn node_permutation_permutes_nullifiers(state in five_mode_state(), theta in vec(-PI..PI, 5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        for preset in [GraphPreset::Linear, GraphPreset::Pentagon, GraphPreset::Star] {
            let graph = GraphSpec::preset(preset).unwrap();
            let j = graph.adjacency();
            let mut moved = RealMatrix::zeros(5, 5);
            let mut labeling = vec![0; 5];
            for i in 0..5 {
                labeling[perm[i]] = graph.labeling()[i];
                for k in 0..5 {
                    moved[(perm[i], perm[k])] = j[(i, k)];
                }
            }
            let relabeled = GraphSpec::custom(moved).unwrap().with_labeling(labeling).unwrap();
            let a = nullifier_variances(&state, &graph, &theta).unwrap();
            let b = nullifier_variances(&state, &relabeled, &theta).unwrap();
            for i in 0..5 {
                prop_assert!((a[i] - b[perm[i]]).abs() < 1e-12 * a[i].max(1.0));
            }
        }
    }

    #[test]
    fn certify_is_invariant_under_mode_relabeling(state in five_mode_state(), theta in vec(-PI..PI, 5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let p = RealMatrix::from_fn(5, 5, |r, c| if r == perm[c] { 1.0 } else { 0.0 });
        let swapped = change_basis(&state, &SymplecticMatrix::new(block_diag2(&p)).unwrap(), state.basis).unwrap();
        let mut moved_theta = vec![0.0; 5];
        for m in 0..5 {
            moved_theta[perm[m]] = theta[m];
        }
        for preset in GraphPreset::NAMED {
            let graph = GraphSpec::preset(preset).unwrap();
            let labeling: Vec<usize> = graph.labeling().iter().map(|&m| perm[m]).collect();
            let relabeled = graph.clone().with_labeling(labeling).unwrap();
            let a = certify(&state, &graph, &theta).unwrap();
            let b = certify(&swapped, &relabeled, &moved_theta).unwrap();
            prop_assert_eq!(a.passed, b.passed);
            for (x, y) in a.nullifier_variances.iter().zip(&b.nullifier_variances) {
                prop_assert!((x - y).abs() < 1e-12 * x.max(1.0));
            }
            for (x, y) in a.bounds.iter().zip(&b.bounds) {
                prop_assert!((x.sum - y.sum).abs() < 1e-12 * x.sum.max(1.0));
            }
        }
    }

    #[test]
    fn ghz_is_star_after_lo_rotation(state in five_mode_state(), theta in vec(-PI..PI, 5)) {
        let star = GraphSpec::preset(GraphPreset::Star).unwrap();
        let ghz = GraphSpec::preset(GraphPreset::Ghz).unwrap();
        let center = ghz.labeling()[2];
        let shifted: Vec<f64> = theta.iter().enumerate().map(|(m, t)| if m == center { *t } else { t + FRAC_PI_2 }).collect();
        let a = nullifier_variances(&state, &star, &theta).unwrap();
        let b = nullifier_variances(&state, &ghz, &shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn nullifier_form_gradient(state in five_mode_state(), theta in vec(-PI..PI, 5)) {
        let graph = GraphSpec::preset(GraphPreset::Pentagon).unwrap();
        let form = nullifier_form(&state, &graph).unwrap();
        let total = |t: &[f64]| nullifier_variances(&state, &graph, t).unwrap().iter().sum::<f64>();
        prop_assert!((form.value(&theta) - total(&theta)).abs() < 1e-10 * total(&theta));
        let v: Vec<f64> = theta.iter().flat_map(|t| [t.cos(), t.sin()]).collect();
        let hv = &form.h * DVector::from_vec(v);
        let h = 1e-6;
        for j in 0..5 {
            let analytic = 2.0 * (-theta[j].sin() * hv[2 * j] + theta[j].cos() * hv[2 * j + 1]);
            let (mut tp, mut tm) = (theta.clone(), theta.clone());
            tp[j] += h;
            tm[j] -= h;
            let fd = (total(&tp) - total(&tm)) / (2.0 * h);
            prop_assert!((fd - analytic).abs() < 1e-6 * analytic.abs().max(1.0));
        }
    }

    #[test]
    fn fitness_is_pure(p in pump(5), theta in vec(-PI..PI, 5), euler in vec(-PI..PI, 10), post in vec(-PI..PI, 10)) {
        let cfg = ArrayConfig::homogeneous(5, 0.24, 30.0);
        let graph = GraphSpec::preset(GraphPreset::Linear).unwrap();
        let a = fitness_fc(&cfg, 30.0, &graph, &p, &theta).unwrap();
        prop_assert_eq!(a.to_bits(), fitness_fc(&cfg, 30.0, &graph, &p, &theta).unwrap().to_bits());
        let b = fitness_fp(&cfg, 30.0, &graph, &p, &euler, &theta, &post).unwrap();
        prop_assert_eq!(b.to_bits(), fitness_fp(&cfg, 30.0, &graph, &p, &euler, &theta, &post).unwrap().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn es_is_seeded_and_monotone(seed in any::<u64>(), shift in vec(-1.0f64..1.0, 4)) {
        let space = vec![Coordinate::Bounded { lo: -3.0, hi: 3.0 }; 4];
        let f = |x: &mut [f64]| x.iter().zip(&shift).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let cfg = EsConfig { seed, max_generations: 60, ..EsConfig::default() };
        let a = minimize(f, &space, None, &cfg).unwrap();
        let b = minimize(f, &space, None, &cfg).unwrap();
        prop_assert_eq!(&a.best_parameters, &b.best_parameters);
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
        let par = minimize(f, &space, None, &EsConfig { parallel: true, ..cfg }).unwrap();
        prop_assert!(par.parallel);
        prop_assert!(par.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn vacuum_baselines() {
    let vacuum = GaussianState::vacuum(5, Basis::Individual);
    for preset in GraphPreset::NAMED {
        let graph = GraphSpec::preset(preset).unwrap();
        for v in nullifier_variances(&vacuum, &graph, &[0.3, -1.0, 2.0, 0.0, 0.7]).unwrap() {
            assert!((v - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
    for rho in vlf_all(&vacuum, &[0.1, 0.2, 0.3, 0.4, 0.5], &[0.0; 5]).unwrap() {
        assert!((rho - 4.0).abs() <= 16.0 * f64::EPSILON);
    }
}

#[test]
fn cluster_transforms_are_symplectic() {
    for preset in GraphPreset::NAMED {
        let c = cluster_transform(&GraphSpec::preset(preset).unwrap()).unwrap();
        let s = c.transform.matrix();
        assert!(max_abs(&(s * omega(5) * s.transpose() - omega(5))) < 1e-12);
    }
}

#[test]
fn synthesis_problems_round_trip() {
    let cfg = ArrayConfig::homogeneous(5, 0.24, 30.0);
    let graph = GraphSpec::preset(GraphPreset::Star).unwrap();
    for problem in [
        OptimizationProblem::cluster(cfg.clone(), 30.0, graph.clone()).unwrap(),
        OptimizationProblem::emulation(cfg.clone(), 30.0, graph.clone()).unwrap(),
    ] {
        let x: Vec<f64> = (0..problem.dimension())
            .map(|i| (i as f64 * 0.37).sin() * 0.5 + 0.5)
            .collect();
        let decoded = problem.decode(&x).unwrap();
        let again = problem.encode(&decoded).unwrap();
        assert_eq!(problem.decode(&again).unwrap(), decoded);
    }
}

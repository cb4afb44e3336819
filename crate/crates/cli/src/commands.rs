use anw_core::entanglement::{
    certify_with, emulated_state, emulation_error, nullifier_variances, vlf_all,
    CertificationReport,
};
use anw_core::linalg::{bloch_messiah, max_abs, RealMatrix, SymplecticMatrix};
use anw_core::measurement::{change_basis, min_variance, squeezing_db};
use anw_core::model::{
    flat_pump_propagator, linear_supermodes, propagator_exact, propagator_no_ordering,
    propagator_rk4, supermode_rotation, Basis, GaussianState, PumpProfile, RK4_STEP,
};
use anw_core::optimizer::{evolve, FitnessKind, OptimizationProblem};
use anyhow::{bail, Context};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, SweepVariable};
use crate::record::{rows, OptimizerSummary, ResultRecord, Squeezing, VERSION};

/// A finished command: a table for CSV and a value for JSON.
pub struct Output {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: serde_json::Value,
    /// Exit code 2 when set.
    pub failed_certification: bool,
}

impl Output {
    fn table(header: Vec<String>, rows: Vec<Vec<f64>>, json: serde_json::Value) -> Self {
        Self {
            header,
            rows: rows
                .into_iter()
                .map(|r| r.iter().map(|v| v.to_string()).collect())
                .collect(),
            json,
            failed_certification: false,
        }
    }

    fn record(record: &ResultRecord) -> anyhow::Result<Self> {
        let mut rows = Vec::new();
        if let Some(v) = &record.nullifier_variances {
            rows.extend(
                v.iter()
                    .enumerate()
                    .map(|(i, v)| vec!["nullifier".into(), i.to_string(), v.to_string()]),
            );
        }
        if let Some(r) = &record.rho {
            rows.extend(
                r.iter()
                    .enumerate()
                    .map(|(i, v)| vec!["rho".into(), i.to_string(), v.to_string()]),
            );
        }
        for s in &record.squeezing {
            rows.push(vec![
                format!("variance_{}", s.basis),
                s.mode.to_string(),
                s.variance.to_string(),
            ]);
        }
        Ok(Self {
            header: vec!["quantity".into(), "index".into(), "value".into()],
            rows,
            json: serde_json::to_value(record)?,
            failed_certification: record.certification.as_ref().is_some_and(|c| !c.passed),
        })
    }
}

/// Shared command-line settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub parallel: bool,
}

fn squeezing_table(state: &GaussianState, label: &str) -> anyhow::Result<Vec<Squeezing>> {
    (0..state.n_modes())
        .map(|m| {
            let (v, _) = min_variance(state, m)?;
            Ok(Squeezing {
                basis: label.into(),
                mode: m,
                variance: v,
                db: squeezing_db(v)?,
            })
        })
        .collect()
}

/// Minimum variances in the individual, linear-supermode and
/// nonlinear-supermode bases.
fn all_squeezing(cfg: &ScenarioConfig, state: &GaussianState) -> anyhow::Result<Vec<Squeezing>> {
    let modes = linear_supermodes(&cfg.array_config())?;
    let lin = change_basis(state, &supermode_rotation(&modes), Basis::LinearSupermode)?;
    let bm = bloch_messiah(&state.propagator)?;
    let mut out = squeezing_table(state, "individual")?;
    out.extend(squeezing_table(&lin, "linear_supermode")?);
    for (m, r) in bm.squeezing.iter().enumerate() {
        let v = (-2.0 * r).exp();
        out.push(Squeezing {
            basis: "nonlinear_supermode".into(),
            mode: m,
            variance: v,
            db: squeezing_db(v)?,
        });
    }
    Ok(out)
}

fn base_record(
    command: &str,
    cfg: &ScenarioConfig,
    opts: RunOptions,
    state: &GaussianState,
) -> anyhow::Result<ResultRecord> {
    Ok(ResultRecord {
        command: command.into(),
        version: VERSION.into(),
        seed: opts.seed.or(cfg.optimizer.as_ref().and_then(|o| o.seed)),
        input: cfg.clone(),
        resolved: cfg.clone(),
        z: state.z,
        covariance: rows(&state.covariance),
        squeezing: all_squeezing(cfg, state)?,
        rho: None,
        nullifier_variances: None,
        emulation_error: None,
        certification: None,
        optimizer: None,
    })
}

pub fn supermodes(cfg: &ScenarioConfig) -> anyhow::Result<Output> {
    let modes = linear_supermodes(&cfg.array_config())?;
    let n = modes.n();
    let mut header = vec!["k".to_string(), "lambda_per_mm".to_string()];
    header.extend((1..=n).map(|j| format!("m_{j}")));
    let table: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut r = vec![(k + 1) as f64, modes.eigenvalues[k]];
            r.extend(modes.matrix.row(k).iter());
            r
        })
        .collect();
    #[derive(Serialize)]
    struct Mode {
        k: usize,
        lambda: f64,
        vector: Vec<f64>,
    }
    let json: Vec<Mode> = (0..n)
        .map(|k| Mode {
            k: k + 1,
            lambda: modes.eigenvalues[k],
            vector: modes.matrix.row(k).iter().copied().collect(),
        })
        .collect();
    Ok(Output::table(header, table, serde_json::to_value(json)?))
}

fn z_grid(cfg: &ScenarioConfig) -> anyhow::Result<Vec<f64>> {
    match &cfg.sweep {
        Some(s) if s.variable == SweepVariable::Z => s.points(),
        Some(_) => bail!("this command sweeps z only"),
        None => Ok((0..=100).map(|i| cfg.z() * i as f64 / 100.0).collect()),
    }
}

fn map_points<T: Send>(
    points: &[f64],
    parallel: bool,
    f: impl Fn(f64) -> anyhow::Result<T> + Sync,
) -> anyhow::Result<Vec<T>> {
    if parallel {
        points.par_iter().map(|&p| f(p)).collect()
    } else {
        points.iter().map(|&p| f(p)).collect()
    }
}

/// Squeezing per mode in the three bases along `z`.
pub fn propagate(cfg: &ScenarioConfig, opts: RunOptions) -> anyhow::Result<Output> {
    let array = cfg.array_config();
    let pump = cfg.pump_profile()?;
    let n = array.n;
    let mut header = vec!["z_mm".to_string()];
    for basis in ["ind", "lin", "nl"] {
        header.extend((1..=n).map(|k| format!("{basis}_var_{k}")));
        header.extend((1..=n).map(|k| format!("{basis}_db_{k}")));
    }
    let table = map_points(&z_grid(cfg)?, opts.parallel, |z| {
        let state = propagator_exact(&array, &pump, z)?;
        let sq = all_squeezing(cfg, &state)?;
        let mut row = vec![z];
        for chunk in sq.chunks(n) {
            row.extend(chunk.iter().map(|s| s.variance));
            row.extend(chunk.iter().map(|s| s.db));
        }
        Ok(row)
    })?;
    let json = serde_json::json!({ "header": header, "rows": table });
    Ok(Output::table(header, table, json))
}

fn vlf_problem(
    cfg: &ScenarioConfig,
    z: f64,
    pump: &PumpProfile,
    kind: FitnessKind,
) -> anyhow::Result<OptimizationProblem> {
    let array = cfg.array_config();
    let p = match kind {
        FitnessKind::Vlf => OptimizationProblem::vlf(array, z, pump.clone())?,
        FitnessKind::VlfWithPhases => {
            OptimizationProblem::vlf_with_phases(array, z, pump.amplitudes.clone())?
        }
        _ => bail!("vlf needs fitness `vlf` or `vlf_with_phases`"),
    };
    Ok(p.with_bounds(cfg.bounds()))
}

/// VLF values along a sweep, optionally optimized at every point.
pub fn vlf(cfg: &ScenarioConfig, opts: RunOptions) -> anyhow::Result<Output> {
    let n = cfg.array.n;
    if n < 2 {
        bail!("VLF inequalities need at least two waveguides");
    }
    let base_pump = cfg.pump_profile()?;
    let (variable, points) = match &cfg.sweep {
        Some(s) => (s.variable, s.points()?),
        None => (SweepVariable::Z, vec![cfg.z()]),
    };
    let es = cfg.es_config(opts.seed, false);
    let array = cfg.array_config();
    let rows = map_points(&points, opts.parallel, |p| {
        let (z, pump) = match variable {
            SweepVariable::Z => (p, base_pump.clone()),
            SweepVariable::Eta => (
                cfg.z(),
                PumpProfile::new(vec![p; n], base_pump.phases.clone()),
            ),
        };
        let (pump, theta, gains) = match &cfg.optimizer {
            Some(o) => {
                let problem = vlf_problem(cfg, z, &pump, o.fitness)?;
                let r = evolve(&problem, &es)?;
                let d = problem.decode(&r.best_parameters)?;
                (d.pump, d.theta, d.gains)
            }
            None => (pump, cfg.theta(), cfg.gains()),
        };
        let state = propagator_exact(&array, &pump, z)?;
        let mut row = vec![p];
        row.extend(vlf_all(&state, &theta, &gains)?);
        row.extend(theta);
        row.extend(gains);
        row.extend(pump.phases.iter());
        Ok(row)
    })?;
    let name = match variable {
        SweepVariable::Z => "z_mm",
        SweepVariable::Eta => "eta_per_mm",
    };
    let mut header = vec![name.to_string()];
    header.extend((1..n).map(|i| format!("rho_{i}")));
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    header.extend((1..=n).map(|i| format!("gain_{i}")));
    header.extend((1..=n).map(|i| format!("phi_{i}")));
    let json = serde_json::json!({ "header": header, "rows": rows });
    Ok(Output::table(header, rows, json))
}

/// Nullifier-based synthesis or replay of a cluster state.
pub fn cluster(cfg: &ScenarioConfig, opts: RunOptions) -> anyhow::Result<Output> {
    let record = cluster_record(cfg, opts)?;
    Output::record(&record)
}

pub fn cluster_record(cfg: &ScenarioConfig, opts: RunOptions) -> anyhow::Result<ResultRecord> {
    let array = cfg.array_config();
    let graph = cfg.graph_spec()?;
    let z = cfg.z();
    let search = cfg.optimizer.as_ref().filter(|o| o.generations != Some(0));
    let kind = match &cfg.optimizer {
        Some(o) => o.fitness,
        None if cfg.detection.is_some() => FitnessKind::Emulation,
        None => FitnessKind::Cluster,
    };
    let (pump, theta, detection, summary) = match search {
        Some(o) => {
            let mut problem = match o.fitness {
                FitnessKind::Cluster => {
                    OptimizationProblem::cluster(array.clone(), z, graph.clone())?
                }
                FitnessKind::Emulation => {
                    OptimizationProblem::emulation(array.clone(), z, graph.clone())?
                }
                _ => bail!("cluster needs fitness `cluster` or `emulation`"),
            }
            .with_bounds(cfg.bounds());
            if let Some(l) = o.local_search {
                problem.local_search = l;
            }
            if let Some(w) = o.warm_start {
                problem.warm_start = w;
            }
            let r = evolve(&problem, &cfg.es_config(opts.seed, opts.parallel))?;
            let d = problem.decode(&r.best_parameters)?;
            let det = (kind == FitnessKind::Emulation).then(|| (d.euler.clone(), d.post.clone()));
            (
                d.pump.clone(),
                d.theta.clone(),
                det,
                Some(OptimizerSummary::new(&r, d)),
            )
        }
        None => {
            let det = match kind {
                FitnessKind::Emulation => Some(
                    cfg.detection_angles()
                        .context("emulation replay needs `detection`")?,
                ),
                _ => None,
            };
            (cfg.pump_profile()?, cfg.graph_theta()?, det, None)
        }
    };
    let state = propagator_exact(&array, &pump, z)?;
    let mut record = base_record("cluster", cfg, opts, &state)?;
    let (variances, error) = match &detection {
        Some((euler, post)) => {
            let em = emulated_state(&state, &theta, post)?;
            (
                nullifier_variances(&em, &graph, &vec![0.0; array.n])?,
                Some(emulation_error(&graph, &state, euler, &theta, post)?),
            )
        }
        None => (nullifier_variances(&state, &graph, &theta)?, None),
    };
    record.resolved = cfg.resolved(
        &pump,
        &theta,
        &[],
        detection
            .as_ref()
            .map(|(e, p)| (e.as_slice(), p.as_slice())),
    );
    record.nullifier_variances = Some(variances);
    record.emulation_error = error;
    record.optimizer = summary;
    Ok(record)
}

/// Certification of explicit parameters; fails with exit code 2.
pub fn verify(cfg: &ScenarioConfig, opts: RunOptions) -> anyhow::Result<Output> {
    let record = verify_record(cfg, opts)?;
    Output::record(&record)
}

pub fn verify_record(cfg: &ScenarioConfig, opts: RunOptions) -> anyhow::Result<ResultRecord> {
    let array = cfg.array_config();
    let graph = cfg.graph_spec()?;
    let state = propagator_exact(&array, &cfg.pump_profile()?, cfg.z())?;
    let theta = cfg.graph_theta()?;
    let gains = cfg.gains();
    let report: CertificationReport = match cfg.detection_angles() {
        Some((_, post)) => {
            let em = emulated_state(&state, &theta, &post)?;
            certify_with(&em, &graph, &vec![0.0; array.n], &gains, None)?
        }
        None => certify_with(&state, &graph, &theta, &gains, None)?,
    };
    let mut record = base_record("verify", cfg, opts, &state)?;
    record.nullifier_variances = Some(report.nullifier_variances.clone());
    record.rho = Some(report.vlf_rho.clone());
    record.certification = Some(report);
    Ok(record)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub z: f64,
    /// `max |S_exact - S_rk4|`, individual basis.
    pub exact_vs_rk4: f64,
    /// `max |S_exact - S_no_ordering|`, linear-supermode basis.
    pub exact_vs_no_ordering: f64,
    /// Same comparison on covariance matrices.
    pub exact_vs_no_ordering_covariance: f64,
    /// Only for a flat pump.
    pub exact_vs_flat_analytic: Option<f64>,
    pub no_ordering_vs_flat_analytic: Option<f64>,
    /// `(|eta|, max |V_exact - V_no_ordering|)` for the pump shape scaled
    /// over `[1e-3, 1e-2]`.
    pub ordering_scan: Vec<(f64, f64)>,
    pub ordering_slope: Option<f64>,
    pub symplectic_defect: f64,
}

/// Cross-checks every propagator against the others.
pub fn oracle_check(cfg: &ScenarioConfig) -> anyhow::Result<Output> {
    let report = oracle_report(cfg)?;
    let rows = vec![
        vec!["exact_vs_rk4".into(), report.exact_vs_rk4.to_string()],
        vec![
            "exact_vs_no_ordering".into(),
            report.exact_vs_no_ordering.to_string(),
        ],
        vec![
            "exact_vs_no_ordering_covariance".into(),
            report.exact_vs_no_ordering_covariance.to_string(),
        ],
        vec![
            "exact_vs_flat_analytic".into(),
            opt(report.exact_vs_flat_analytic),
        ],
        vec![
            "no_ordering_vs_flat_analytic".into(),
            opt(report.no_ordering_vs_flat_analytic),
        ],
        vec!["ordering_slope".into(), opt(report.ordering_slope)],
        vec![
            "symplectic_defect".into(),
            report.symplectic_defect.to_string(),
        ],
    ];
    Ok(Output {
        header: vec!["check".into(), "value".into()],
        rows,
        json: serde_json::to_value(&report)?,
        failed_certification: false,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn to_supermodes(rot: &SymplecticMatrix, s: &SymplecticMatrix) -> RealMatrix {
    rot.matrix() * s.matrix() * rot.matrix().transpose()
}

pub fn oracle_report(cfg: &ScenarioConfig) -> anyhow::Result<OracleReport> {
    let array = cfg.array_config();
    let pump = cfg.pump_profile()?;
    let z = cfg.z();
    let exact = propagator_exact(&array, &pump, z)?;
    let rk4 = propagator_rk4(&array, &pump, z, RK4_STEP)?;
    let rot = supermode_rotation(&linear_supermodes(&array)?);
    let exact_lin = to_supermodes(&rot, &exact.propagator);
    let no = propagator_no_ordering(&array, &pump, z)?;
    let exact_lin_cov = &exact_lin * exact_lin.transpose();
    let flat = pump.amplitudes.windows(2).all(|w| w[0] == w[1])
        && pump.phases.windows(2).all(|w| w[0] == w[1]);
    let (vs_flat, no_vs_flat) = if flat && !pump.is_empty() {
        let eta = Complex64::from_polar(pump.amplitudes[0], pump.phases[0]);
        let analytic = flat_pump_propagator(&array, eta, z)?;
        (
            Some(max_abs(&(analytic.propagator.matrix() - &exact_lin))),
            Some(max_abs(
                &(analytic.propagator.matrix() - no.propagator.matrix()),
            )),
        )
    } else {
        (None, None)
    };
    let peak = pump.amplitudes.iter().copied().fold(0.0, f64::max);
    let scan: Vec<(f64, f64)> = if peak > 0.0 {
        (0..10)
            .map(|i| {
                let eta = 1e-3 * 10f64.powf(i as f64 / 9.0);
                let scaled = PumpProfile::new(
                    pump.amplitudes.iter().map(|a| a * eta / peak).collect(),
                    pump.phases.clone(),
                );
                let e = propagator_exact(&array, &scaled, z)?;
                let e_lin = to_supermodes(&rot, &e.propagator);
                let nl = propagator_no_ordering(&array, &scaled, z)?;
                Ok((eta, max_abs(&(&e_lin * e_lin.transpose() - &nl.covariance))))
            })
            .collect::<anyhow::Result<_>>()?
    } else {
        Vec::new()
    };
    let slope = (!scan.is_empty() && scan.iter().all(|(_, e)| *e > 0.0)).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = scan.iter().copied().unzip();
        loglog_slope(&x, &y)
    });
    Ok(OracleReport {
        z,
        exact_vs_rk4: max_abs(&(rk4 - exact.propagator.matrix())),
        exact_vs_no_ordering: max_abs(&(no.propagator.matrix() - &exact_lin)),
        exact_vs_no_ordering_covariance: max_abs(&(&no.covariance - exact_lin_cov)),
        exact_vs_flat_analytic: vs_flat,
        no_ordering_vs_flat_analytic: no_vs_flat,
        ordering_scan: scan,
        ordering_slope: slope,
        symplectic_defect: exact.propagator.defect(),
    })
}

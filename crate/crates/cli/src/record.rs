use anw_core::entanglement::CertificationReport;
use anw_core::linalg::RealMatrix;
use anw_core::optimizer::{OptimizationResult, ParameterSet};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

/// Minimum quadrature variance of one mode in one basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Squeezing {
    pub basis: String,
    pub mode: usize,
    pub variance: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub best_fitness: f64,
    pub evaluations: usize,
    pub generations: usize,
    pub seed: u64,
    pub parallel: bool,
    pub run_best: Vec<f64>,
    /// Best-so-far fitness per generation.
    pub trace: Vec<f64>,
    pub parameters: ParameterSet,
}

impl OptimizerSummary {
    pub fn new(r: &OptimizationResult, parameters: ParameterSet) -> Self {
        Self {
            best_fitness: r.best_fitness,
            evaluations: r.evaluations,
            generations: r.generations,
            seed: r.seed,
            parallel: r.parallel,
            run_best: r.run_best.clone(),
            trace: r.trace.clone(),
            parameters,
        }
    }
}

/// Everything one command produced. `resolved` replays the metrics without
/// any search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub input: ScenarioConfig,
    pub resolved: ScenarioConfig,
    pub z: f64,
    pub covariance: Vec<Vec<f64>>,
    pub squeezing: Vec<Squeezing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nullifier_variances: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emulation_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certification: Option<CertificationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSummary>,
}

pub fn rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

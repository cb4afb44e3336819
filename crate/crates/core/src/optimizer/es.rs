use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyperparameters of the `(mu/mu, lambda)` evolution strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsConfig {
    /// Parents `mu`.
    pub parents: usize,
    /// Offspring `lambda`.
    pub population: usize,
    /// Initial step size in genotype units.
    pub sigma0: f64,
    pub max_generations: usize,
    /// Stop once the best fitness drops below this value.
    pub target: Option<f64>,
    pub seed: u64,
    /// Extra independent runs with derived seeds; the best run wins.
    pub restarts: usize,
    /// Evaluate offspring on the rayon pool.
    pub parallel: bool,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            parents: 5,
            population: 40,
            sigma0: 0.3,
            max_generations: 500,
            target: None,
            seed: 0,
            restarts: 0,
            parallel: false,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parents == 0 || self.population < self.parents {
            return Err(Error::InvalidEsConfig(format!(
                "need 0 < parents <= population, got {} and {}",
                self.parents, self.population
            )));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidEsConfig(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if self.max_generations == 0 {
            return Err(Error::InvalidEsConfig(
                "max_generations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Seed of restart `k`.
    pub fn run_seed(&self, k: usize) -> u64 {
        self.seed
            .wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// How one genotype coordinate is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coordinate {
    /// Clipped to `[lo, hi]`.
    Bounded { lo: f64, hi: f64 },
    /// Unbounded; the objective reads it modulo `2 pi`.
    Periodic,
}

impl Coordinate {
    fn project(self, v: f64) -> f64 {
        match self {
            Self::Bounded { lo, hi } => v.clamp(lo, hi),
            Self::Periodic => v,
        }
    }

    fn max_step(self) -> f64 {
        match self {
            Self::Bounded { lo, hi } => (hi - lo).max(f64::MIN_POSITIVE),
            Self::Periodic => 2.0 * std::f64::consts::PI,
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Bounded { lo, hi } if hi > lo => rng.random_range(lo..=hi),
            Self::Bounded { lo, .. } => lo,
            Self::Periodic => rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Best genotype found.
    pub best_parameters: Vec<f64>,
    pub best_fitness: f64,
    /// Best-so-far fitness after each generation, over all runs in order.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
    pub seed: u64,
    pub parallel: bool,
    /// Best fitness of every run, the first being the unrestarted one.
    pub run_best: Vec<f64>,
}

struct Individual {
    x: Vec<f64>,
    sigma: Vec<f64>,
    fitness: f64,
}

/// Minimizes `objective` with a `(mu/mu_I, lambda)`-ES using self-adaptive
/// per-coordinate step sizes (learning rates `1/sqrt(2n)` and
/// `1/sqrt(2 sqrt n)`). Step sizes recombine geometrically and never exceed
/// the width of their coordinate.
///
/// The objective may rewrite the genotype it receives (a local improvement
/// step); the rewritten vector is what selection sees. Random numbers are
/// drawn sequentially, so the result is identical with or without
/// `parallel`.
pub fn minimize<F>(
    objective: F,
    space: &[Coordinate],
    x0: Option<&[f64]>,
    config: &EsConfig,
) -> Result<OptimizationResult>
where
    F: Fn(&mut [f64]) -> f64 + Sync,
{
    config.validate()?;
    let n = space.len();
    if n == 0 {
        return Err(Error::InvalidEsConfig("empty parameter space".into()));
    }
    if let Some(x) = x0 {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
    }
    let mut result = OptimizationResult {
        best_parameters: Vec::new(),
        best_fitness: f64::INFINITY,
        trace: Vec::new(),
        evaluations: 0,
        generations: 0,
        seed: config.seed,
        parallel: config.parallel,
        run_best: Vec::new(),
    };
    for run in 0..=config.restarts {
        let start = if run == 0 { x0 } else { None };
        let (x, f) = single_run(
            &objective,
            space,
            start,
            config,
            config.run_seed(run),
            &mut result,
        );
        result.run_best.push(f);
        if f < result.best_fitness || result.best_parameters.is_empty() {
            result.best_fitness = f;
            result.best_parameters = x;
        }
        if config.target.is_some_and(|t| result.best_fitness <= t) {
            break;
        }
    }
    Ok(result)
}

fn single_run<F>(
    objective: &F,
    space: &[Coordinate],
    x0: Option<&[f64]>,
    config: &EsConfig,
    seed: u64,
    result: &mut OptimizationResult,
) -> (Vec<f64>, f64)
where
    F: Fn(&mut [f64]) -> f64 + Sync,
{
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau_global = 1.0 / (2.0 * n as f64).sqrt();
    let tau_local = 1.0 / (2.0 * (n as f64).sqrt()).sqrt();

    let mut mean: Vec<f64> = match x0 {
        Some(x) => x.iter().zip(space).map(|(v, c)| c.project(*v)).collect(),
        None => space.iter().map(|c| c.sample(&mut rng)).collect(),
    };
    let mut sigma = vec![config.sigma0; n];
    let mut best_x = mean.clone();
    let mut best_f = {
        let f = objective(&mut best_x);
        result.evaluations += 1;
        mean.clone_from(&best_x);
        sanitize(f)
    };

    for _ in 0..config.max_generations {
        let mut offspring: Vec<Individual> = (0..config.population)
            .map(|_| {
                let global: f64 = rng.sample(StandardNormal);
                let s: Vec<f64> = sigma
                    .iter()
                    .map(|s| {
                        let local: f64 = rng.sample(StandardNormal);
                        s * (tau_global * global + tau_local * local).exp()
                    })
                    .collect();
                let x = mean
                    .iter()
                    .zip(&s)
                    .zip(space)
                    .map(|((m, s), c)| {
                        let z: f64 = rng.sample(StandardNormal);
                        c.project(m + s * z)
                    })
                    .collect();
                Individual {
                    x,
                    sigma: s,
                    fitness: f64::INFINITY,
                }
            })
            .collect();
        let eval = |ind: &mut Individual| ind.fitness = sanitize(objective(&mut ind.x));
        if config.parallel {
            offspring.par_iter_mut().for_each(eval);
        } else {
            offspring.iter_mut().for_each(eval);
        }
        result.evaluations += offspring.len();
        offspring.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));

        if offspring[0].fitness < best_f {
            best_f = offspring[0].fitness;
            best_x.clone_from(&offspring[0].x);
        }
        let mu = config.parents as f64;
        let parents = &offspring[..config.parents];
        for i in 0..n {
            mean[i] = space[i].project(parents.iter().map(|p| p.x[i]).sum::<f64>() / mu);
            let log_mean = parents.iter().map(|p| p.sigma[i].ln()).sum::<f64>() / mu;
            sigma[i] = log_mean.exp().min(space[i].max_step());
        }
        result.generations += 1;
        let global_best = best_f.min(result.best_fitness);
        result.trace.push(global_best);
        if config.target.is_some_and(|t| best_f <= t) {
            break;
        }
    }
    (best_x, best_f)
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &mut [f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn sphere_converges() {
        let space = vec![Coordinate::Bounded { lo: -5.0, hi: 5.0 }; 10];
        let cfg = EsConfig {
            max_generations: 200,
            seed: 3,
            ..EsConfig::default()
        };
        let r = minimize(sphere, &space, None, &cfg).unwrap();
        assert!(r.best_fitness < 1e-6, "{}", r.best_fitness);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.evaluations, 1 + 200 * 40);
    }

    #[test]
    fn deterministic_and_parallel_agree() {
        let space = vec![Coordinate::Periodic; 6];
        let f = |x: &mut [f64]| x.iter().map(|v| 1.0 - v.cos()).sum::<f64>();
        let cfg = EsConfig {
            max_generations: 30,
            seed: 9,
            restarts: 1,
            ..EsConfig::default()
        };
        let a = minimize(f, &space, None, &cfg).unwrap();
        let b = minimize(f, &space, None, &cfg).unwrap();
        let c = minimize(
            f,
            &space,
            None,
            &EsConfig {
                parallel: true,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best_parameters, c.best_parameters);
        assert_eq!(a.trace, c.trace);
        assert!(c.parallel);
    }

    #[test]
    fn rejects_bad_config() {
        let space = vec![Coordinate::Periodic];
        let bad = EsConfig {
            parents: 50,
            ..EsConfig::default()
        };
        assert!(matches!(
            minimize(sphere, &space, None, &bad),
            Err(Error::InvalidEsConfig(_))
        ));
        assert!(minimize(sphere, &[], None, &EsConfig::default()).is_err());
    }
}

use std::f64::consts::PI;
use std::path::Path;

use anw_core::entanglement::{GraphPreset, GraphSpec};
use anw_core::linalg::RealMatrix;
use anw_core::model::{ArrayConfig, PumpProfile};
use anw_core::optimizer::{EsConfig, FitnessKind, ParameterBounds};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// A scenario file. Phases and angles are in units of pi, amplitudes and
/// coupling in mm^-1, lengths in mm. Mode and node indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub array: ArraySection,
    /// Propagation distance; defaults to the array length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub n: usize,
    pub coupling_strength: f64,
    /// `f_1 .. f_{N-1}`; homogeneous when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_profile: Option<Vec<f64>>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub amplitudes: Vec<f64>,
    /// Zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_pi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub theta_pi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
}

/// Supermode-emulation detection: Euler angles of the mode rotation and of
/// the electronic recombination, both in units of pi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub euler_pi: Vec<f64>,
    pub post_pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<GraphPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
    /// `labeling[node] = mode`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeling: Option<Vec<usize>>,
    /// Evaluate a star-graph parameter set as a GHZ state by shifting the LO
    /// phases.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ghz_from_star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub fitness: FitnessKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_search: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Propagation distance, mm.
    Z,
    /// Flat pump amplitude, mm^-1.
    Eta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

fn to_radians(v: &[f64]) -> Vec<f64> {
    v.iter().map(|a| a * PI).collect()
}

fn to_pi(v: &[f64]) -> Vec<f64> {
    v.iter().map(|a| a / PI).collect()
}

impl SweepSection {
    pub fn points(&self) -> anyhow::Result<Vec<f64>> {
        if self.steps == 0 {
            bail!("sweep needs at least one step");
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|i| self.start + h * i as f64).collect())
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let n = self.array.n;
        self.array_config().validate()?;
        if let Some(p) = &self.pump {
            self.pump_profile()?.validate(n)?;
            if p.phases_pi.as_ref().is_some_and(|v| v.len() != n) {
                bail!("pump.phases_pi needs {n} entries");
            }
        }
        if let Some(m) = &self.measurement {
            if m.theta_pi.len() != n {
                bail!("measurement.theta_pi needs {n} entries");
            }
            if m.gains.as_ref().is_some_and(|g| g.len() != n) {
                bail!("measurement.gains needs {n} entries");
            }
        }
        if let Some(d) = &self.detection {
            let k = n * (n - 1) / 2;
            if d.euler_pi.len() != k || d.post_pi.len() != k {
                bail!("detection angles need {k} entries each");
            }
        }
        if self.graph.is_some() {
            let g = self.graph_spec()?;
            if g.n() != n {
                bail!("graph has {} nodes but the array has {n} waveguides", g.n());
            }
        }
        if let Some(z) = self.z {
            if !(z.is_finite() && z >= 0.0) {
                bail!("z must be finite and >= 0");
            }
        }
        if let Some(s) = &self.sweep {
            s.points()?;
        }
        Ok(())
    }

    pub fn array_config(&self) -> ArrayConfig {
        let a = &self.array;
        ArrayConfig {
            n: a.n,
            coupling_strength: a.coupling_strength,
            coupling_profile: a
                .coupling_profile
                .clone()
                .unwrap_or_else(|| vec![1.0; a.n.saturating_sub(1)]),
            length: a.length,
        }
    }

    pub fn z(&self) -> f64 {
        self.z.unwrap_or(self.array.length)
    }

    /// The configured pump, or no pump.
    pub fn pump_profile(&self) -> anyhow::Result<PumpProfile> {
        let n = self.array.n;
        Ok(match &self.pump {
            Some(p) => PumpProfile::new(
                p.amplitudes.clone(),
                p.phases_pi
                    .as_deref()
                    .map(to_radians)
                    .unwrap_or_else(|| vec![0.0; p.amplitudes.len()]),
            ),
            None => PumpProfile::zero(n),
        })
    }

    pub fn theta(&self) -> Vec<f64> {
        match &self.measurement {
            Some(m) => to_radians(&m.theta_pi),
            None => vec![0.0; self.array.n],
        }
    }

    pub fn gains(&self) -> Vec<f64> {
        self.measurement
            .as_ref()
            .and_then(|m| m.gains.clone())
            .unwrap_or_else(|| vec![0.0; self.array.n])
    }

    /// `(euler, post)` in radians.
    pub fn detection_angles(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.detection
            .as_ref()
            .map(|d| (to_radians(&d.euler_pi), to_radians(&d.post_pi)))
    }

    pub fn graph_spec(&self) -> anyhow::Result<GraphSpec> {
        let Some(g) = &self.graph else {
            bail!("this command needs a `graph` section");
        };
        let mut spec = match (&g.preset, &g.adjacency) {
            (Some(p), None) => GraphSpec::preset(if g.ghz_from_star {
                GraphPreset::Ghz
            } else {
                *p
            })?,
            (None, Some(rows)) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    bail!("graph.adjacency must be square");
                }
                GraphSpec::custom(RealMatrix::from_fn(n, n, |i, j| rows[i][j]))?
            }
            _ => bail!("graph needs exactly one of `preset` and `adjacency`"),
        };
        if g.ghz_from_star && g.preset != Some(GraphPreset::Star) {
            bail!("ghz_from_star needs the star preset");
        }
        if let Some(l) = &g.labeling {
            spec = spec.with_labeling(l.clone())?;
        }
        Ok(spec)
    }

    /// LO phases in radians, shifted onto the GHZ convention when the star
    /// parameters are reused.
    pub fn graph_theta(&self) -> anyhow::Result<Vec<f64>> {
        let theta = self.theta();
        if self.graph.as_ref().is_some_and(|g| g.ghz_from_star) {
            let offsets = self.graph_spec()?.ghz_offsets();
            return Ok(theta.iter().zip(offsets).map(|(t, o)| t - o).collect());
        }
        Ok(theta)
    }

    pub fn es_config(&self, seed: Option<u64>, parallel: bool) -> EsConfig {
        let d = EsConfig::default();
        let o = self.optimizer.as_ref();
        let get =
            |f: fn(&OptimizerSection) -> Option<usize>, dflt: usize| o.and_then(f).unwrap_or(dflt);
        EsConfig {
            parents: get(|o| o.parents, d.parents),
            population: get(|o| o.population, d.population),
            sigma0: o.and_then(|o| o.sigma0).unwrap_or(d.sigma0),
            max_generations: get(|o| o.generations, d.max_generations),
            target: o.and_then(|o| o.target),
            seed: seed.or(o.and_then(|o| o.seed)).unwrap_or(d.seed),
            restarts: get(|o| o.restarts, d.restarts),
            parallel,
        }
    }

    pub fn bounds(&self) -> ParameterBounds {
        let d = ParameterBounds::default();
        let o = self.optimizer.as_ref();
        ParameterBounds {
            eta_max: o.and_then(|o| o.eta_max).unwrap_or(d.eta_max),
            gain_min: o.and_then(|o| o.gain_min).unwrap_or(d.gain_min),
            gain_max: o.and_then(|o| o.gain_max).unwrap_or(d.gain_max),
        }
    }

    /// A copy carrying explicit parameters and no optimizer, replaying a
    /// result without search.
    pub fn resolved(
        &self,
        pump: &PumpProfile,
        theta: &[f64],
        gains: &[f64],
        detection: Option<(&[f64], &[f64])>,
    ) -> Self {
        let mut out = self.clone();
        out.pump = Some(PumpSection {
            amplitudes: pump.amplitudes.clone(),
            phases_pi: Some(to_pi(&pump.phases)),
        });
        out.measurement = Some(MeasurementSection {
            theta_pi: to_pi(theta),
            gains: (!gains.is_empty()).then(|| gains.to_vec()),
        });
        if let Some((euler, post)) = detection {
            out.detection = Some(DetectionSection {
                euler_pi: to_pi(euler),
                post_pi: to_pi(post),
            });
        }
        if let Some(g) = out.graph.as_mut() {
            if g.ghz_from_star {
                g.ghz_from_star = false;
                g.preset = Some(GraphPreset::Ghz);
            }
        }
        out.optimizer = None;
        out.sweep = None;
        out
    }
}

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::RealMatrix;
use crate::measurement::QuadratureCombination;
use crate::{Error, Result};

/// Named five-node graphs, plus user-supplied adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphPreset {
    Linear,
    Pentagon,
    Star,
    Pyramid,
    Ghz,
    Custom,
}

impl GraphPreset {
    pub const NAMED: [GraphPreset; 5] = [
        Self::Linear,
        Self::Pentagon,
        Self::Star,
        Self::Pyramid,
        Self::Ghz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Pentagon => "pentagon",
            Self::Star => "star",
            Self::Pyramid => "pyramid",
            Self::Ghz => "ghz",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for GraphPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "pentagon" => Ok(Self::Pentagon),
            "star" => Ok(Self::Star),
            "pyramid" => Ok(Self::Pyramid),
            "ghz" => Ok(Self::Ghz),
            "custom" => Ok(Self::Custom),
            other => Err(Error::InvalidConfig(format!(
                "unknown graph preset `{other}`"
            ))),
        }
    }
}

/// Unit-weight graph. Node `i` is carried by mode `labeling[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    adjacency: RealMatrix,
    labeling: Vec<usize>,
    preset: GraphPreset,
}

/// The star's center node.
const STAR_CENTER: usize = 2;

fn from_edges(n: usize, edges: &[(usize, usize)]) -> RealMatrix {
    let mut j = RealMatrix::zeros(n, n);
    for &(a, b) in edges {
        j[(a, b)] = 1.0;
        j[(b, a)] = 1.0;
    }
    j
}

impl GraphSpec {
    /// One of the named five-node graphs with identity labeling.
    pub fn preset(preset: GraphPreset) -> Result<Self> {
        let edges: &[(usize, usize)] = match preset {
            GraphPreset::Linear => &[(0, 1), (1, 2), (2, 3), (3, 4)],
            GraphPreset::Pentagon => &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)],
            GraphPreset::Star | GraphPreset::Ghz => &[(0, 2), (1, 2), (2, 3), (2, 4)],
            GraphPreset::Pyramid => &[
                (0, 1),
                (0, 2),
                (0, 4),
                (1, 2),
                (1, 3),
                (2, 3),
                (2, 4),
                (3, 4),
            ],
            GraphPreset::Custom => {
                return Err(Error::InvalidConfig(
                    "custom graphs need an adjacency matrix".into(),
                ));
            }
        };
        Ok(Self {
            adjacency: from_edges(5, edges),
            labeling: (0..5).collect(),
            preset,
        })
    }

    /// Custom graph from an edge list over nodes `0..n`.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= n || *b >= n || a == b) {
            return Err(Error::InvalidConfig(format!(
                "invalid edge ({a}, {b}) for {n} nodes"
            )));
        }
        Self::custom(from_edges(n, edges))
    }

    /// Custom graph from a symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn custom(adjacency: RealMatrix) -> Result<Self> {
        let n = crate::linalg::ensure_square(&adjacency)?;
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidConfig(
                    "adjacency diagonal must be zero".into(),
                ));
            }
            for k in 0..n {
                let v = adjacency[(i, k)];
                if v != adjacency[(k, i)] || !(v == 0.0 || v == 1.0) {
                    return Err(Error::InvalidConfig(
                        "adjacency must be symmetric with 0/1 entries".into(),
                    ));
                }
            }
        }
        Ok(Self {
            adjacency,
            labeling: (0..n).collect(),
            preset: GraphPreset::Custom,
        })
    }

    /// Replaces the node-to-mode assignment.
    pub fn with_labeling(mut self, labeling: Vec<usize>) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if labeling.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labeling.len(),
            });
        }
        for &m in &labeling {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidConfig(format!(
                    "labeling {labeling:?} is not a permutation"
                )));
            }
        }
        self.labeling = labeling;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &RealMatrix {
        &self.adjacency
    }

    pub fn labeling(&self) -> &[usize] {
        &self.labeling
    }

    pub fn preset_kind(&self) -> GraphPreset {
        self.preset
    }

    /// Adjacency between modes rather than nodes.
    pub fn mode_adjacency(&self) -> RealMatrix {
        let n = self.n();
        let mut out = RealMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.labeling[a], self.labeling[b])] = self.adjacency[(a, b)];
            }
        }
        out
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency
            .row(node)
            .iter()
            .filter(|&&v| v != 0.0)
            .count()
    }

    /// LO offsets turning star nullifiers into GHZ nullifiers: `-pi/2` on
    /// every mode except the center's.
    pub fn ghz_offsets(&self) -> Vec<f64> {
        let center = self.labeling[STAR_CENTER];
        (0..self.n())
            .map(|m| if m == center { 0.0 } else { -FRAC_PI_2 })
            .collect()
    }
}

/// Normalized nullifiers `(y_i(theta_i) - sum_i' J_ii' x_i'(theta_i')) / sqrt(1 + n(i))`,
/// one per node, with the five-node special cases: the pyramid uses
/// `(y_4 - y_1) / sqrt 2` and `(y_5 - y_2) / sqrt 2` for its last two nodes,
/// and the GHZ set is the star set seen through LO phases shifted by `-pi/2`
/// on every mode but the center.
pub fn nullifiers_for(graph: &GraphSpec, theta: &[f64]) -> Result<Vec<QuadratureCombination>> {
    let n = graph.n();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    let angles: Vec<f64> = if graph.preset == GraphPreset::Ghz {
        theta
            .iter()
            .zip(graph.ghz_offsets())
            .map(|(t, o)| t + o)
            .collect()
    } else {
        theta.to_vec()
    };
    let lab = &graph.labeling;
    let mut out = Vec::with_capacity(n);
    for node in 0..n {
        let mut c = vec![0.0; 2 * n];
        let norm = if graph.preset == GraphPreset::Pyramid && node >= 3 {
            // node 4 pairs with node 1, node 5 with node 2
            c[n + lab[node]] = 1.0;
            c[n + lab[node - 3]] = -1.0;
            2.0
        } else {
            c[n + lab[node]] = 1.0;
            for other in 0..n {
                c[lab[other]] -= graph.adjacency[(node, other)];
            }
            1.0 + graph.degree(node) as f64
        };
        out.push(QuadratureCombination::new(c, angles.clone())?.scaled(norm.sqrt().recip()));
    }
    Ok(out)
}

/// Full-inseparability condition `V(d_a) + V(d_b) < bound` over nodes `a`, `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InseparabilityBound {
    pub nodes: (usize, usize),
    pub bound: f64,
}

/// Bounds for the named five-node graphs; `None` for custom graphs.
pub fn preset_bounds(preset: GraphPreset) -> Option<Vec<InseparabilityBound>> {
    let b = |a: usize, c: usize, bound: f64| InseparabilityBound {
        nodes: (a, c),
        bound,
    };
    let edge = (8.0f64 / 3.0).sqrt();
    let inner = 4.0 / 3.0;
    let star = (8.0f64 / 5.0).sqrt();
    match preset {
        GraphPreset::Linear => Some(vec![
            b(0, 1, edge),
            b(1, 2, inner),
            b(2, 3, inner),
            b(3, 4, edge),
        ]),
        GraphPreset::Pentagon => Some((0..4).map(|i| b(i, i + 1, inner)).collect()),
        GraphPreset::Star | GraphPreset::Ghz => Some(
            [0, 1, 3, 4]
                .iter()
                .map(|&i| b(i, STAR_CENTER, star))
                .collect(),
        ),
        GraphPreset::Pyramid => Some(vec![b(3, STAR_CENTER, star), b(4, STAR_CENTER, star)]),
        GraphPreset::Custom => None,
    }
}

//! Evolution-strategy search over pump and detection parameters.

mod es;
mod fitness;

pub use es::{minimize, Coordinate, EsConfig, OptimizationResult};
pub use fitness::{
    evolve, fitness_fc, fitness_fm, fitness_fp, refine_detection, wrap_angle, FitnessKind,
    OptimizationProblem, ParameterBounds, ParameterSet,
};

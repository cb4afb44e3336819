//! Multipartite entanglement: van Loock-Furusawa inequalities, graph
//! nullifiers with their inseparability bounds, and the cluster transforms
//! used to emulate a graph state from independent squeezers.

mod certify;
mod cluster;
mod graph;
mod phases;

pub use certify::{
    certify, certify_with, nullifier_variances, vlf_all, vlf_combinations, vlf_rho, BoundCheck,
    CertificationReport, VLF_THRESHOLD,
};
pub use cluster::{
    cluster_transform, detection_transform, emulated_state, emulation_error, emulation_error_from,
    s_lo, s_lo_from, ClusterTransform,
};
pub use graph::{nullifiers_for, preset_bounds, GraphPreset, GraphSpec, InseparabilityBound};
pub use phases::{nullifier_form, optimize_lo_phases, NullifierForm};

//! Grids, discrete fields, Luxemburg norms and the embedding experiments.

mod experiments;
mod field;
mod grid;
mod norms;

pub use experiments::{
    embedding_experiment, random_field, refinement_study, trace_experiment, trial_rng, ExperimentStats,
    RandomSmoothField, DEFAULT_MODES,
};
pub use field::DiscreteField;
pub use grid::{BoundaryNode, Grid};
pub use norms::{
    anisotropic_norm, boundary_modular, boundary_norm, holder_pairing, holder_pairing_with, luxemburg_norm, modular,
    NormReport,
};

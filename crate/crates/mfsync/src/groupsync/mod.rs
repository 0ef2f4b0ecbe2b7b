//! SO(3) instantiation of multi-frequency synchronization: Wigner-D
//! representations, group noise models, the spectral/harmonic-retrieval
//! pipeline, and iterative refinement.

pub mod pipeline;
pub mod rotation;
pub mod stacks;
pub mod wigner;

pub use pipeline::{group_correlation, group_ppe, group_refine, GroupRefineOutcome};
pub use rotation::{read_rotations_csv, sample_rotation, write_rotations_csv, Rotation};
pub use stacks::{
    group_stack_corruption, group_stack_gaussian, stack_representations, GroupNoise,
    RotationStack,
};
pub use wigner::{character, rep_dim, wigner_rep, RepresentationTable, MAX_DEGREE};

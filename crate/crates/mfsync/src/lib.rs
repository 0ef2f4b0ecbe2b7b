//! Multi-frequency phase synchronization.
//!
//! Estimating `n` angles (or rotations) from noisy pairwise offsets on a
//! graph, using many "frequency channels" of the same measurements at once:
//! per-channel spectral relaxation, Dirichlet-kernel periodogram peak
//! extraction for per-edge offsets, and a soft-thresholded multi-frequency
//! generalized power method for iterative refinement. A compact-group
//! instantiation covers SO(3) via Wigner-D representations, and an experiment
//! harness reproduces the correlation sweeps at desk scale.

pub mod error;
pub mod groupsync;
pub mod harmonic;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod sync;

pub use error::{Error, Result};

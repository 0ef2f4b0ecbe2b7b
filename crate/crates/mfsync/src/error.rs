//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the synchronization pipelines and their building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// The eigensolver did not reach the requested residual within `max_iter`
    /// iterations. Usually signals a degenerate or tied leading eigenvalue.
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e}, target {target:.3e}){}", channel_suffix(*.channel))]
    NoConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
        channel: Option<usize>,
    },

    /// The input matrix has zero Frobenius norm; it has no leading eigenvector.
    #[error("matrix is identically zero{}", channel_suffix(*.channel))]
    ZeroMatrix { channel: Option<usize> },

    /// A matrix handed to the unitary projection is (numerically) rank
    /// deficient, so the nearest unitary matrix is not unique.
    #[error("rank-deficient matrix in unitary projection (min singular value {sigma_min:.3e}){}", block_suffix(*.block))]
    RankDeficient { sigma_min: f64, block: Option<usize> },

    /// An Erdős–Rényi draw failed to produce a connected graph within the
    /// retry budget; `p` is too small for `n`.
    #[error("no connected graph after {attempts} attempts (n = {n}, p = {p})")]
    DisconnectedAfterRetries { n: usize, p: f64, attempts: usize },

    /// Two vectors that must share a length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Periodogram grid too coarse for the requested number of harmonics.
    #[error("grid size {grid_size} is below the Nyquist-safe minimum {min} for k_max = {k_max}")]
    GridTooCoarse {
        grid_size: usize,
        k_max: usize,
        min: usize,
    },

    /// Requested an irreducible representation beyond the supported range.
    #[error("unsupported representation degree k = {k} (supported: 1..={max})")]
    UnsupportedDegree { k: usize, max: usize },

    /// A parameter is outside its documented range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Construction of a matrix violated a structural invariant.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// Configuration file or value rejected.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn channel_suffix(channel: Option<usize>) -> String {
    match channel {
        Some(k) => format!(" [frequency channel k = {k}]"),
        None => String::new(),
    }
}

fn block_suffix(block: Option<usize>) -> String {
    match block {
        Some(i) => format!(" [vertex block {i}]"),
        None => String::new(),
    }
}

impl Error {
    /// Attach a frequency-channel index to eigensolver errors bubbling out of
    /// a per-channel loop.
    pub fn with_channel(self, k: usize) -> Self {
        match self {
            Error::NoConvergence {
                iterations,
                residual,
                target,
                ..
            } => Error::NoConvergence {
                iterations,
                residual,
                target,
                channel: Some(k),
            },
            Error::ZeroMatrix { .. } => Error::ZeroMatrix { channel: Some(k) },
            other => other,
        }
    }

    /// Attach a vertex-block index to projection errors.
    pub fn with_block(self, i: usize) -> Self {
        match self {
            Error::RankDeficient { sigma_min, .. } => Error::RankDeficient {
                sigma_min,
                block: Some(i),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Block-Hermitian measurement stacks for SO(3) synchronization.
//!
//! Channel `k` is an `(n d_k) x (n d_k)` Hermitian matrix whose `(i, j)`
//! block carries degree-`k` representation data for the pair `(i, j)`. The
//! random corruption model stores `rho_k(g_ij)` with one group element drawn
//! per edge (shared across channels); the Gaussian model is
//! `(lambda_k / n) X^(k) (X^(k))* + (n d_k)^{-1/2} Delta^(k)` with a complex
//! Wigner `Delta^(k)`, independent across channels.

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::rng::{edge_rng, Rng};

use super::rotation::{sample_rotation, Rotation};
use super::wigner::{rep_dim, RepresentationTable};

/// Which noise model produced a rotation stack.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupNoise {
    RandomCorruption { r: f64 },
    AdditiveGaussian { lambda: Vec<f64> },
}

/// Per-frequency block-Hermitian measurements plus the ground truth they
/// were generated from.
#[derive(Debug, Clone)]
pub struct RotationStack {
    pub k_max: usize,
    pub n: usize,
    /// `channels[k-1]` has dimension `n * (2k+1)`.
    pub channels: Vec<HermitianMatrix>,
    pub truth: Vec<Rotation>,
    pub noise: GroupNoise,
    pub seed: u64,
}

impl RotationStack {
    pub fn channel(&self, k: usize) -> &HermitianMatrix {
        &self.channels[k - 1]
    }

    /// The `(i, j)` sub-block of channel `k`.
    pub fn block(&self, k: usize, i: usize, j: usize) -> ComplexMatrix {
        let d = rep_dim(k);
        let h = self.channel(k);
        ComplexMatrix::from_fn(d, d, |p, q| h.get(i * d + p, j * d + q))
    }
}

/// Stack `[rho_k(g_1); ...; rho_k(g_n)]`, an `(n d_k) x d_k` matrix.
pub fn stack_representations(rotations: &[Rotation], k: usize) -> Result<ComplexMatrix> {
    let d = rep_dim(k);
    let n = rotations.len();
    let mut out = ComplexMatrix::zeros(n * d, d);
    for (i, g) in rotations.iter().enumerate() {
        let rep = super::wigner::wigner_rep(k, g)?;
        for p in 0..d {
            for q in 0..d {
                out[(i * d + p, q)] = rep[(p, q)];
            }
        }
    }
    Ok(out)
}

fn write_block(h: &mut HermitianMatrix, d: usize, i: usize, j: usize, block: &ComplexMatrix) {
    if i == j {
        for p in 0..d {
            for q in p..d {
                h.set_pair(i * d + p, i * d + q, block[(p, q)]);
            }
        }
    } else {
        for p in 0..d {
            for q in 0..d {
                h.set_pair(i * d + p, j * d + q, block[(p, q)]);
            }
        }
    }
}

/// Random corruption on the complete graph: each edge keeps `g_i g_j^{-1}`
/// with probability `r`, otherwise a Haar-uniform element; channel blocks
/// are `rho_k` of the same draw.
pub fn group_stack_corruption(
    truth: &[Rotation],
    r: f64,
    k_max: usize,
    rng: &mut Rng,
) -> Result<RotationStack> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter {
            name: "r",
            message: format!("corruption probability {r} outside [0, 1]"),
        });
    }
    let table = RepresentationTable::new(k_max)?;
    let n = truth.len();
    assert!(n >= 2, "need at least two vertices");
    let seed = rng.gen::<u64>();

    let mut channels: Vec<HermitianMatrix> = (1..=k_max)
        .map(|k| HermitianMatrix::zeros(n * rep_dim(k)))
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut er = edge_rng(seed, i, j);
            let keep = er.gen::<f64>() < r;
            let g_ij = if keep {
                truth[i].compose(&truth[j].inverse())
            } else {
                sample_rotation(&mut er)
            };
            for k in 1..=k_max {
                let rep = table.rep(k, &g_ij)?;
                write_block(&mut channels[k - 1], rep_dim(k), i, j, &rep);
            }
        }
    }
    Ok(RotationStack {
        k_max,
        n,
        channels,
        truth: truth.to_vec(),
        noise: GroupNoise::RandomCorruption { r },
        seed,
    })
}

/// Additive Gaussian model
/// `H^(k) = (lambda_k / n) X^(k) (X^(k))* + (n d_k)^{-1/2} Delta^(k)`,
/// `Delta^(k)` Hermitian with i.i.d. standard complex Gaussian entries above
/// the diagonal (real N(0,1) on it), independent across channels.
pub fn group_stack_gaussian(
    truth: &[Rotation],
    lambda: &[f64],
    rng: &mut Rng,
) -> Result<RotationStack> {
    let k_max = lambda.len();
    let table = RepresentationTable::new(k_max)?;
    if lambda.iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            message: "signal-to-noise ratios must be positive".into(),
        });
    }
    let n = truth.len();
    assert!(n >= 2, "need at least two vertices");
    let seed = rng.gen::<u64>();
    let half = std::f64::consts::FRAC_1_SQRT_2;

    let reps: Vec<Vec<ComplexMatrix>> = truth
        .iter()
        .map(|g| table.all(g))
        .collect::<Result<_>>()?;

    let mut channels = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let d = rep_dim(k);
        let noise_scale = 1.0 / ((n * d) as f64).sqrt();
        let signal_scale = lambda[k - 1] / n as f64;
        let mut h = HermitianMatrix::zeros(n * d);
        for i in 0..n {
            for j in i..n {
                // Vertex-pair stream; channels consume it in order.
                let mut er = edge_rng(seed.wrapping_add(k as u64), i, j);
                let signal = reps[i][k - 1].mul(&reps[j][k - 1].adjoint());
                let block = ComplexMatrix::from_fn(d, d, |p, q| {
                    let noise = if i == j {
                        match p.cmp(&q) {
                            std::cmp::Ordering::Less => {
                                let re: f64 = StandardNormal.sample(&mut er);
                                let im: f64 = StandardNormal.sample(&mut er);
                                Complex64::new(re * half, im * half)
                            }
                            std::cmp::Ordering::Equal => {
                                let re: f64 = StandardNormal.sample(&mut er);
                                Complex64::new(re, 0.0)
                            }
                            // Filled by Hermitian mirroring in write_block.
                            std::cmp::Ordering::Greater => Complex64::new(0.0, 0.0),
                        }
                    } else {
                        let re: f64 = StandardNormal.sample(&mut er);
                        let im: f64 = StandardNormal.sample(&mut er);
                        Complex64::new(re * half, im * half)
                    };
                    signal_scale * signal[(p, q)] + noise_scale * noise
                });
                write_block(&mut h, d, i, j, &block);
            }
        }
        channels.push(h);
    }
    Ok(RotationStack {
        k_max,
        n,
        channels,
        truth: truth.to_vec(),
        noise: GroupNoise::AdditiveGaussian {
            lambda: lambda.to_vec(),
        },
        seed,
    })
}

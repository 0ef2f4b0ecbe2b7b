//! Ground truth, observation graphs, and noise-model generators.
//!
//! Two noise models share one interface: the *random corruption* model keeps
//! each edge measurement intact with probability `r` and replaces it with a
//! uniform phase otherwise, with higher frequency channels formed by
//! entrywise powers of the same draw; the *additive Gaussian* model adds an
//! independent complex Wigner matrix per channel. Both produce a
//! [`FrequencyStack`] whose channels share an observation graph.
//!
//! Every generator is deterministic given its seed. Edge noise is drawn from
//! per-edge ChaCha streams, so the result does not depend on edge visiting
//! order.

use std::fmt;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::rng::{edge_rng, Rng};

/// Unit-modulus tolerance for phase-vector entries.
pub const UNIT_TOL: f64 = 1e-12;

/// A vector of `n` unit-modulus complex entries, the estimation target and
/// every iterate of the pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    entries: Vec<Complex64>,
}

impl PhaseVector {
    pub fn from_angles(angles: &[f64]) -> Self {
        Self {
            entries: angles
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t))
                .collect(),
        }
    }

    /// Validate arbitrary entries as unit-modulus.
    pub fn from_entries(entries: Vec<Complex64>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if (e.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidParameter {
                    name: "entries",
                    message: format!("entry {i} has modulus {:.15}", e.norm()),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Normalize arbitrary nonzero entries to unit modulus.
    pub fn project(entries: &[Complex64]) -> Self {
        Self {
            entries: entries
                .iter()
                .map(|e| {
                    let n = e.norm();
                    if n > 0.0 {
                        e / n
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn angles(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.arg().rem_euclid(std::f64::consts::TAU))
            .collect()
    }

    /// Entrywise k-th power, computed on angles so the result stays exactly
    /// unit-modulus for any k.
    pub fn entrywise_power(&self, k: u32) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| Complex64::from_polar(1.0, k as f64 * e.arg()))
                .collect(),
        }
    }
}

impl std::ops::Index<usize> for PhaseVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

/// `n` i.i.d. angles uniform on the circle.
pub fn sample_ground_truth(n: usize, rng: &mut Rng) -> PhaseVector {
    assert!(n >= 2, "need at least two vertices");
    let angles: Vec<f64> = (0..n)
        .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
        .collect();
    PhaseVector::from_angles(&angles)
}

/// Undirected connected observation graph as a symmetric 0/1 adjacency with
/// an empty diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl ObservationGraph {
    pub fn complete(n: usize) -> Self {
        let mut adjacency = vec![true; n * n];
        for i in 0..n {
            adjacency[i * n + i] = false;
        }
        Self { n, adjacency }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    message: format!("bad edge ({i},{j}) for n = {n}"),
                });
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
        }
        let g = Self { n, adjacency };
        if !g.is_connected() {
            return Err(Error::InvalidParameter {
                name: "edges",
                message: "graph is not connected".into(),
            });
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Edges with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&b| b).count() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    /// Empirical edge density `2|E| / (n(n-1))`, the fallback estimate of the
    /// Erdős–Rényi parameter when it is not known.
    pub fn edge_density(&self) -> f64 {
        2.0 * self.edge_count() as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for u in 0..self.n {
                if self.has_edge(v, u) && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }
}

/// Retry budget for connected-graph sampling.
const CONNECT_ATTEMPTS: usize = 100;

/// Erdős–Rényi G(n, p), resampled until connected (at most 100 attempts).
pub fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Result<ObservationGraph> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            message: format!("edge probability {p} outside (0, 1]"),
        });
    }
    assert!(n >= 2, "need at least two vertices");
    for _ in 0..CONNECT_ATTEMPTS {
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    adjacency[i * n + j] = true;
                    adjacency[j * n + i] = true;
                }
            }
        }
        let g = ObservationGraph { n, adjacency };
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::DisconnectedAfterRetries {
        n,
        p,
        attempts: CONNECT_ATTEMPTS,
    })
}

/// Which noise model produced a stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Each edge intact with probability `r`, else uniform phase.
    RandomCorruption { r: f64 },
    /// `A ∘ [z^k (z^k)* + sigma * Delta^(k)]` with unit-variance complex
    /// Gaussian entries in each `Delta^(k)`, independent across channels.
    AdditiveGaussian { sigma: f64 },
    /// Entrywise powers of a recovered matrix (repeated pipeline runs).
    Powered,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::RandomCorruption { r } => write!(f, "corruption(r={r})"),
            NoiseKind::AdditiveGaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            NoiseKind::Powered => write!(f, "powered"),
        }
    }
}

/// Provenance of a stack: noise kind, seed, the generator's edge probability,
/// and whether the incomplete-graph rescale has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct StackMeta {
    pub noise: NoiseKind,
    pub seed: u64,
    /// Edge probability of the observation graph (1.0 for complete graphs).
    pub edge_probability: f64,
    pub rescaled_by: Option<f64>,
}

/// `k_max` Hermitian measurement matrices sharing one observation graph.
#[derive(Debug, Clone)]
pub struct FrequencyStack {
    pub k_max: usize,
    /// `channels[k-1]` holds the frequency-k matrix.
    pub channels: Vec<HermitianMatrix>,
    pub graph: ObservationGraph,
    pub meta: StackMeta,
}

impl FrequencyStack {
    pub fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn channel(&self, k: usize) -> &HermitianMatrix {
        &self.channels[k - 1]
    }

    /// Check the structural invariants of a freshly generated stack: support
    /// equals the graph's edges, zero diagonal, Hermitian storage. Rescaled
    /// stacks intentionally carry a unit diagonal and are skipped.
    pub fn validate(&self) -> Result<()> {
        if self.meta.rescaled_by.is_some() {
            return Ok(());
        }
        let n = self.dim();
        for (ci, ch) in self.channels.iter().enumerate() {
            if ch.dim() != n {
                return Err(Error::InvalidMatrix(format!(
                    "channel {} has dimension {} instead of {n}",
                    ci + 1,
                    ch.dim()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    let v = ch.get(i, j);
                    let on_edge = i != j && self.graph.has_edge(i, j);
                    if !on_edge && v.norm() != 0.0 {
                        return Err(Error::InvalidMatrix(format!(
                            "channel {} has support off the graph at ({i},{j})",
                            ci + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Random corruption stack (one uniform phase per corrupted edge, powered
/// into every channel; channels are *not* redrawn independently).
pub fn random_corruption_stack(
    z: &PhaseVector,
    g: &ObservationGraph,
    r: f64,
    k_max: usize,
    rng: &mut Rng,
) -> Result<FrequencyStack> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter {
            name: "r",
            message: format!("corruption probability {r} outside [0, 1]"),
        });
    }
    if z.len() != g.vertex_count() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: g.vertex_count(),
        });
    }
    assert!(k_max >= 1);
    let n = g.vertex_count();
    let seed = rng.gen::<u64>();
    // Base offsets theta_ij with H_ij = e^{i theta_ij}; powers share the draw.
    let mut offsets = vec![0.0f64; n * n];
    for (i, j) in g.edges() {
        let mut er = edge_rng(seed, i, j);
        let keep = er.gen::<f64>() < r;
        let theta = if keep {
            (z[i] * z[j].conj()).arg()
        } else {
            er.gen::<f64>() * std::f64::consts::TAU
        };
        offsets[i * n + j] = theta;
    }
    let channels = (1..=k_max)
        .map(|k| {
            HermitianMatrix::from_upper(n, |i, j| {
                if i != j && g.has_edge(i, j) {
                    Complex64::from_polar(1.0, k as f64 * offsets[i * n + j])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Ok(FrequencyStack {
        k_max,
        channels,
        graph: g.clone(),
        meta: StackMeta {
            noise: NoiseKind::RandomCorruption { r },
            seed,
            edge_probability: g.edge_density(),
            rescaled_by: None,
        },
    })
}

/// Additive Gaussian stack: `A ∘ [z^k (z^k)* + sigma * Delta^(k)]`, where each
/// `Delta^(k)` has independent upper-diagonal entries with N(0, 1/2) real and
/// imaginary parts (unit entry variance), drawn independently across channels.
pub fn additive_gaussian_stack(
    z: &PhaseVector,
    g: &ObservationGraph,
    sigma: f64,
    k_max: usize,
    rng: &mut Rng,
) -> Result<FrequencyStack> {
    if sigma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            message: format!("noise level {sigma} is negative"),
        });
    }
    if z.len() != g.vertex_count() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: g.vertex_count(),
        });
    }
    assert!(k_max >= 1);
    let n = g.vertex_count();
    let seed = rng.gen::<u64>();
    let powers: Vec<PhaseVector> = (1..=k_max).map(|k| z.entrywise_power(k as u32)).collect();
    let half = std::f64::consts::FRAC_1_SQRT_2;

    // Per-edge streams; each edge draws its k_max complex noise values in
    // channel order, so channels stay independent and edge order is free.
    let mut noise = vec![Complex64::new(0.0, 0.0); n * n * k_max];
    for (i, j) in g.edges() {
        let mut er = edge_rng(seed, i, j);
        for k in 0..k_max {
            let re: f64 = StandardNormal.sample(&mut er);
            let im: f64 = StandardNormal.sample(&mut er);
            noise[(k * n + i) * n + j] = Complex64::new(re * half, im * half);
        }
    }
    let channels = (1..=k_max)
        .map(|k| {
            let zk = &powers[k - 1];
            HermitianMatrix::from_upper(n, |i, j| {
                if i != j && g.has_edge(i, j) {
                    zk[i] * zk[j].conj() + sigma * noise[((k - 1) * n + i) * n + j]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Ok(FrequencyStack {
        k_max,
        channels,
        graph: g.clone(),
        meta: StackMeta {
            noise: NoiseKind::AdditiveGaussian { sigma },
            seed,
            edge_probability: g.edge_density(),
            rescaled_by: None,
        },
    })
}

/// Incomplete-graph rescale `(1/p) (H^(k) + p I)`, which re-centers an
/// Erdős–Rényi observation at the complete-graph model in expectation.
pub fn rescale_incomplete(stack: &FrequencyStack, p: f64) -> Result<FrequencyStack> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            message: format!("edge probability {p} outside (0, 1]"),
        });
    }
    let channels = stack
        .channels
        .iter()
        .map(|h| {
            let mut out = h.add_scaled_identity(p);
            out.scale(1.0 / p);
            out
        })
        .collect();
    Ok(FrequencyStack {
        k_max: stack.k_max,
        channels,
        graph: stack.graph.clone(),
        meta: StackMeta {
            rescaled_by: Some(p),
            ..stack.meta.clone()
        },
    })
}

/// Correlation `|x* z| / n`, invariant to global phases on either side.
pub fn correlation(x: &PhaseVector, z: &PhaseVector) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: z.len(),
        });
    }
    let inner: Complex64 = x
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(inner.norm() / x.len() as f64)
}

// ---------------------------------------------------------------------------
// Fixture serialization: adjacency CSV (full 0/1 matrix) plus a channel CSV
// with columns k,i,j,re,im for the upper-triangle entries on edges.
// ---------------------------------------------------------------------------

/// Write a stack as an adjacency CSV and a channel-entries CSV.
pub fn write_stack_csv(stack: &FrequencyStack, adj_path: &Path, chan_path: &Path) -> Result<()> {
    let n = stack.dim();
    let mut adj = std::io::BufWriter::new(std::fs::File::create(adj_path)?);
    for i in 0..n {
        let row: Vec<&str> = (0..n)
            .map(|j| if stack.graph.has_edge(i, j) { "1" } else { "0" })
            .collect();
        writeln!(adj, "{}", row.join(","))?;
    }
    adj.flush()?;

    let mut chan = std::io::BufWriter::new(std::fs::File::create(chan_path)?);
    writeln!(chan, "k,i,j,re,im")?;
    for k in 1..=stack.k_max {
        let h = stack.channel(k);
        for (i, j) in stack.graph.edges() {
            let v = h.get(i, j);
            writeln!(chan, "{k},{i},{j},{:.17e},{:.17e}", v.re, v.im)?;
        }
    }
    chan.flush()?;
    Ok(())
}

/// Read a stack back from the CSV pair written by [`write_stack_csv`].
/// Metadata is not stored in the fixture; the result carries a `Powered`
/// placeholder with seed 0.
pub fn read_stack_csv(adj_path: &Path, chan_path: &Path) -> Result<FrequencyStack> {
    let adj_text = std::fs::read_to_string(adj_path)?;
    let rows: Vec<&str> = adj_text.lines().filter(|l| !l.trim().is_empty()).collect();
    let n = rows.len();
    let mut edges = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != n {
            return Err(Error::Config(format!(
                "adjacency row {i} has {} cells, expected {n}",
                cells.len()
            )));
        }
        for (j, cell) in cells.iter().enumerate() {
            if cell.trim() == "1" && i < j {
                edges.push((i, j));
            }
        }
    }
    let graph = ObservationGraph::from_edges(n, &edges)?;

    let chan_text = std::fs::read_to_string(chan_path)?;
    let mut lines = chan_text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "k,i,j,re,im" {
        return Err(Error::Config(format!("unexpected channel header {header:?}")));
    }
    let mut entries: Vec<(usize, usize, usize, Complex64)> = Vec::new();
    let mut k_max = 0usize;
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(Error::Config(format!("channel line {} malformed", ln + 2)));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|e| Error::Config(format!("channel line {}: {e}", ln + 2)))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|e| Error::Config(format!("channel line {}: {e}", ln + 2)))
        };
        let k = parse_idx(cells[0])?;
        let i = parse_idx(cells[1])?;
        let j = parse_idx(cells[2])?;
        let v = Complex64::new(parse_f(cells[3])?, parse_f(cells[4])?);
        k_max = k_max.max(k);
        entries.push((k, i, j, v));
    }
    let mut channels: Vec<HermitianMatrix> = (0..k_max).map(|_| HermitianMatrix::zeros(n)).collect();
    for (k, i, j, v) in entries {
        channels[k - 1].set_pair(i, j, v);
    }
    Ok(FrequencyStack {
        k_max,
        channels,
        graph,
        meta: StackMeta {
            noise: NoiseKind::Powered,
            seed: 0,
            edge_probability: 0.0,
            rescaled_by: None,
        },
    })
}

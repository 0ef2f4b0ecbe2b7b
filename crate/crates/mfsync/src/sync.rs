//! U(1) synchronization pipelines.
//!
//! * [`spectral_sync`] — single-channel spectral relaxation (leading
//!   eigenvector, entrywise normalized).
//! * [`gpm`] — generalized power method baseline.
//! * [`ppe_spc`] — the three-step multi-frequency pipeline: per-channel
//!   eigenvectors, per-edge periodogram peak extraction, final spectral
//!   synchronization of the recovered offset matrix.
//! * [`mfgpm`] — iterative refinement interleaving per-channel power steps
//!   with soft-thresholded harmonic retrieval per vertex.
//! * [`ppe_spc_repeated`] — re-runs of the pipeline on entrywise powers of
//!   its own recovered offset matrix.
//!
//! Per-channel eigendecompositions and per-edge retrievals are independent
//! and run on the rayon pool; results are collected by index so parallel and
//! sequential execution agree exactly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{
    extract_peak, synthesis_periodogram, thresholded_fourier_coeffs, TrigMomentSeries,
};
use crate::linalg::{default_max_iter, leading_eigenpair, HermitianMatrix, DEFAULT_EIG_TOL};
use crate::models::{rescale_incomplete, FrequencyStack, NoiseKind, PhaseVector, StackMeta};

/// Entry magnitudes below this have no usable phase.
const ZERO_ENTRY_TOL: f64 = 1e-12;

/// Relative step size under which GPM is considered converged.
const GPM_STEP_TOL: f64 = 1e-9;

/// Default iteration counts.
pub const DEFAULT_GPM_ITERS: usize = 200;
pub const DEFAULT_MFGPM_ITERS: usize = 100;

/// Nondecreasing relative threshold schedule for the iterative refinement:
/// ramp from `initial` to `cap` over the first `ramp_fraction` of the run
/// (shape set by `ramp_power`), holding at `cap` afterwards. Low thresholds
/// act like lightly-biased per-channel power steps; high thresholds lock
/// each vertex to its dominant periodogram lobe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdSchedule {
    pub initial: f64,
    pub cap: f64,
    pub ramp_fraction: f64,
    /// Exponent of the ramp: 1 is linear, larger keeps the threshold low
    /// longer and rises late.
    pub ramp_power: f64,
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        // Calibrated on random-corruption reference runs: the threshold must
        // stay low while per-channel power iterations build correlation, and
        // cross into the lock-in regime (above ~0.9) only near the end.
        Self {
            initial: 0.1,
            cap: 0.99,
            ramp_fraction: 1.0,
            ramp_power: 4.0,
        }
    }
}

impl ThresholdSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.ramp_fraction)
            && self.initial >= 0.0
            && self.cap >= self.initial
            && self.ramp_power >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "schedule",
                message: format!("{self:?} violates 0 <= initial <= cap, 0 <= ramp <= 1"),
            })
        }
    }

    /// Threshold for iteration `t` (1-based) of a `t_max`-iteration run.
    pub fn tau(&self, t: usize, t_max: usize) -> f64 {
        let ramp_len = ((self.ramp_fraction * t_max as f64).round() as usize).max(1);
        if t >= ramp_len {
            self.cap
        } else {
            let frac = (t.saturating_sub(1)) as f64 / (ramp_len - 1).max(1) as f64;
            self.initial + (self.cap - self.initial) * frac.powf(self.ramp_power)
        }
    }
}

/// Shared diagnostics for pipeline runs.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Eigensolver iterations or refinement sweeps, by stage.
    pub iterations: usize,
    /// Vertices whose entry phase was undefined at some point (replaced by 1).
    pub zero_entries: Vec<usize>,
    pub wall_ms: f64,
}

/// Output of the multi-frequency initialization pipeline.
#[derive(Debug, Clone)]
pub struct SyncResult {
    pub estimate: PhaseVector,
    pub per_channel_eigenvalues: Vec<f64>,
    /// Per-edge offset estimates `(i, j, theta_ij)` with `i < j`; the reverse
    /// offset is the negation.
    pub retrieved_offsets: Option<Vec<(usize, usize, f64)>>,
    /// The recovered unit-modulus matrix fed to the final spectral step.
    pub recovered: HermitianMatrix,
    pub diagnostics: Diagnostics,
}

/// Spectral relaxation output.
#[derive(Debug, Clone)]
pub struct SpectralSync {
    pub phases: PhaseVector,
    pub eigenvalue: f64,
    /// Indices where the eigenvector entry was too small to carry a phase.
    pub zero_entries: Vec<usize>,
}

/// Leading eigenvector of `h`, entrywise normalized to unit modulus. Entries
/// with magnitude below 1e-12 are replaced by 1 and flagged rather than
/// aborting the run.
pub fn spectral_sync(h: &HermitianMatrix) -> Result<SpectralSync> {
    let pair = leading_eigenpair(h, DEFAULT_EIG_TOL, default_max_iter(h.dim()))?;
    let mut zero_entries = Vec::new();
    let entries: Vec<Complex64> = pair
        .vector
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let n = e.norm();
            if n < ZERO_ENTRY_TOL {
                zero_entries.push(i);
                Complex64::new(1.0, 0.0)
            } else {
                e / n
            }
        })
        .collect();
    Ok(SpectralSync {
        phases: PhaseVector::from_entries(entries).expect("normalized entries"),
        eigenvalue: pair.value,
        zero_entries,
    })
}

/// Iterative-method output.
#[derive(Debug, Clone)]
pub struct IterativeSync {
    pub phases: PhaseVector,
    pub iterations: usize,
    pub zero_entries: Vec<usize>,
}

/// Generalized power method: repeat `x <- normalize(H x)` entrywise for up
/// to `t_max` iterations, stopping early once successive iterates differ by
/// less than `1e-9 sqrt(n)`.
pub fn gpm(h: &HermitianMatrix, init: &PhaseVector, t_max: usize) -> Result<IterativeSync> {
    if t_max < 1 {
        return Err(Error::InvalidParameter {
            name: "t_max",
            message: "need at least one iteration".into(),
        });
    }
    if init.len() != h.dim() {
        return Err(Error::LengthMismatch {
            left: init.len(),
            right: h.dim(),
        });
    }
    let n = h.dim();
    let mut x: Vec<Complex64> = init.as_slice().to_vec();
    let mut zero_entries = Vec::new();
    let mut iterations = 0;
    for _ in 0..t_max {
        iterations += 1;
        let hx = h.matvec(&x);
        let mut next = Vec::with_capacity(n);
        for (i, v) in hx.iter().enumerate() {
            let m = v.norm();
            if m < ZERO_ENTRY_TOL {
                if !zero_entries.contains(&i) {
                    zero_entries.push(i);
                }
                next.push(Complex64::new(1.0, 0.0));
            } else {
                next.push(v / m);
            }
        }
        let step: f64 = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        x = next;
        if step < GPM_STEP_TOL * (n as f64).sqrt() {
            break;
        }
    }
    Ok(IterativeSync {
        phases: PhaseVector::from_entries(x).expect("normalized entries"),
        iterations,
        zero_entries,
    })
}

/// Channels the pipelines operate on: the rescale `(1/p)(H + pI)` with the
/// generator's edge probability (p = 1 on complete graphs). This restores
/// the unit diagonal of the rank-one signal model; eigenvector stages are
/// shift-invariant to it, while the iterative refinement gains the previous
/// iterate's phase as a coherent per-vertex anchor.
fn effective_channels(stack: &FrequencyStack) -> Result<FrequencyStack> {
    if stack.meta.rescaled_by.is_some() {
        return Ok(stack.clone());
    }
    let n = stack.dim();
    let complete = stack.graph.edge_count() == n * (n - 1) / 2;
    let p = if complete {
        1.0
    } else {
        stack.meta.edge_probability
    };
    rescale_incomplete(stack, p)
}

/// Periodogram Peak Extraction with Spectral synchronization.
///
/// Step 1: leading eigenvector per channel (norm `sqrt(n)`). Step 2: for
/// every edge, the offset is the periodogram peak of the per-channel moments
/// `u^(k)_i conj(u^(k)_j)`. Step 3: spectral synchronization of the
/// unit-modulus matrix `exp(i theta_ij)` supported on the graph.
pub fn ppe_spc(stack: &FrequencyStack, grid_size: usize) -> Result<SyncResult> {
    let start = std::time::Instant::now();
    let work = effective_channels(stack)?;
    let n = work.dim();

    // Step 1: per-channel spectral estimates, in parallel.
    let eigs: Vec<(f64, Vec<Complex64>)> = work
        .channels
        .par_iter()
        .enumerate()
        .map(|(idx, h)| {
            leading_eigenpair(h, DEFAULT_EIG_TOL, default_max_iter(n))
                .map(|p| (p.value, p.vector))
                .map_err(|e| e.with_channel(idx + 1))
        })
        .collect::<Result<_>>()?;
    let per_channel_eigenvalues: Vec<f64> = eigs.iter().map(|(v, _)| *v).collect();

    // Step 2: per-edge harmonic retrieval on observed edges only.
    let edges = stack.graph.edges();
    let offsets: Vec<(usize, usize, f64)> = edges
        .par_iter()
        .map(|&(i, j)| {
            let coeffs: Vec<Complex64> = eigs.iter().map(|(_, u)| u[i] * u[j].conj()).collect();
            let series = TrigMomentSeries::new(coeffs)?;
            Ok((i, j, extract_peak(&series, grid_size)?))
        })
        .collect::<Result<_>>()?;

    // Step 3: spectral synchronization of the recovered offsets.
    let mut recovered = HermitianMatrix::zeros(n);
    for &(i, j, theta) in &offsets {
        recovered.set_pair(i, j, Complex64::from_polar(1.0, theta));
    }
    let spectral = spectral_sync(&recovered)?;

    Ok(SyncResult {
        estimate: spectral.phases,
        per_channel_eigenvalues,
        retrieved_offsets: Some(offsets),
        recovered,
        diagnostics: Diagnostics {
            iterations: 1,
            zero_entries: spectral.zero_entries,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// Multi-Frequency Generalized Power Method.
///
/// Per iteration and channel: `u^(k) = H^(k) z^(k)`; per vertex the channel
/// values form a synthesis periodogram that is soft-thresholded at
/// `tau_t * max |h_i|` (relative thresholding keeps the schedule scale-free),
/// inverted back to coefficients, and rounded entrywise to unit modulus.
/// Coefficients too small to round keep the previous iterate's value.
pub fn mfgpm(
    stack: &FrequencyStack,
    init: &PhaseVector,
    schedule: &ThresholdSchedule,
    t_max: usize,
    grid_size: usize,
) -> Result<IterativeSync> {
    if t_max < 1 {
        return Err(Error::InvalidParameter {
            name: "t_max",
            message: "need at least one iteration".into(),
        });
    }
    schedule.validate()?;
    let work = effective_channels(stack)?;
    let n = work.dim();
    if init.len() != n {
        return Err(Error::LengthMismatch {
            left: init.len(),
            right: n,
        });
    }
    let k_max = work.k_max;

    // z[k-1] is the frequency-k iterate, initialized to init^k.
    let mut z: Vec<Vec<Complex64>> = (1..=k_max)
        .map(|k| init.entrywise_power(k as u32).as_slice().to_vec())
        .collect();
    let mut zero_entries: Vec<usize> = Vec::new();

    for t in 1..=t_max {
        let u: Vec<Vec<Complex64>> = work
            .channels
            .par_iter()
            .zip(&z)
            .map(|(h, zk)| h.matvec(zk))
            .collect();
        let tau_rel = schedule.tau(t, t_max);

        let rows: Vec<(Vec<Complex64>, bool)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let coeffs: Vec<Complex64> = (0..k_max).map(|k| u[k][i]).collect();
                let prev: Vec<Complex64> = (0..k_max).map(|k| z[k][i]).collect();
                let series = match TrigMomentSeries::new(coeffs) {
                    Ok(s) => s,
                    Err(_) => return (prev, true),
                };
                let pg = match synthesis_periodogram(&series, grid_size) {
                    Ok(p) => p,
                    Err(_) => return (prev, true),
                };
                let peak = pg.max_abs();
                if peak <= 0.0 {
                    return (prev, true);
                }
                let coeffs = match thresholded_fourier_coeffs(&pg, tau_rel * peak, k_max) {
                    Ok(c) => c,
                    Err(_) => return (prev, true),
                };
                let mut out = Vec::with_capacity(k_max);
                let mut flagged = false;
                for k in 1..=k_max {
                    let c = coeffs.coeff(k);
                    let m = c.norm();
                    if m < ZERO_ENTRY_TOL {
                        out.push(prev[k - 1]);
                        flagged = true;
                    } else {
                        out.push(c / m);
                    }
                }
                (out, flagged)
            })
            .collect();

        for (i, (row, flagged)) in rows.into_iter().enumerate() {
            if flagged && !zero_entries.contains(&i) {
                zero_entries.push(i);
            }
            for k in 0..k_max {
                z[k][i] = row[k];
            }
        }
        // Iterates are entrywise unit-modulus by construction.
        debug_assert!({
            let norm: f64 = z[0].iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
            (norm - (n as f64).sqrt()).abs() < 1e-6
        });
    }

    Ok(IterativeSync {
        phases: PhaseVector::from_entries(z.swap_remove(0)).expect("unit entries"),
        iterations: t_max,
        zero_entries,
    })
}

/// Repeated PPE-SPC: rerun the pipeline on entrywise powers of its own
/// recovered offset matrix, `reps` runs in total.
pub fn ppe_spc_repeated(stack: &FrequencyStack, reps: usize, grid_size: usize) -> Result<SyncResult> {
    if reps < 1 {
        return Err(Error::InvalidParameter {
            name: "reps",
            message: "need at least one run".into(),
        });
    }
    let mut result = ppe_spc(stack, grid_size)?;
    let k_max = stack.k_max;
    for _ in 1..reps {
        let n = result.recovered.dim();
        let channels: Vec<HermitianMatrix> = (1..=k_max)
            .map(|k| {
                HermitianMatrix::from_upper(n, |i, j| {
                    let v = result.recovered.get(i, j);
                    if i != j && v.norm() > 0.0 {
                        Complex64::from_polar(1.0, k as f64 * v.arg())
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        let powered = FrequencyStack {
            k_max,
            channels,
            graph: stack.graph.clone(),
            meta: StackMeta {
                noise: NoiseKind::Powered,
                seed: stack.meta.seed,
                edge_probability: stack.meta.edge_probability,
                rescaled_by: None,
            },
        };
        result = ppe_spc(&powered, grid_size)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        additive_gaussian_stack, correlation, random_corruption_stack, sample_ground_truth,
        ObservationGraph,
    };
    use crate::rng::seeded;

    #[test]
    fn spectral_sync_recovers_rank_one() {
        let z = sample_ground_truth(20, &mut seeded(30));
        let h = HermitianMatrix::outer(z.as_slice());
        let out = spectral_sync(&h).unwrap();
        assert!((correlation(&out.phases, &z).unwrap() - 1.0).abs() < 1e-9);
        assert!(out.zero_entries.is_empty());
    }

    #[test]
    fn spectral_sync_survives_moderate_noise() {
        let mut rng = seeded(31);
        let n = 100;
        let z = sample_ground_truth(n, &mut rng);
        let g = ObservationGraph::complete(n);
        let sigma = 0.1 * (n as f64).sqrt();
        let stack = additive_gaussian_stack(&z, &g, sigma, 1, &mut rng).unwrap();
        let out = spectral_sync(stack.channel(1)).unwrap();
        let corr = correlation(&out.phases, &z).unwrap();
        assert!(corr > 0.97, "correlation {corr}");
    }

    #[test]
    fn spectral_sync_rejects_zero_matrix() {
        assert!(matches!(
            spectral_sync(&HermitianMatrix::zeros(4)),
            Err(Error::ZeroMatrix { .. })
        ));
    }

    #[test]
    fn spectral_sync_flags_zero_entries() {
        // Path graph 0-1 plus isolated vertex 2: leading eigenvector is
        // supported on {0, 1} only.
        let mut h = HermitianMatrix::zeros(3);
        h.set_pair(0, 1, Complex64::new(1.0, 0.0));
        let out = spectral_sync(&h).unwrap();
        assert_eq!(out.zero_entries, vec![2]);
        assert_eq!(out.phases[2], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn gpm_converges_on_clean_data() {
        let mut rng = seeded(32);
        let z = sample_ground_truth(15, &mut rng);
        let h = HermitianMatrix::outer(z.as_slice());
        let init = sample_ground_truth(15, &mut rng);
        let out = gpm(&h, &init, 50).unwrap();
        assert!((correlation(&out.phases, &z).unwrap() - 1.0).abs() < 1e-9);
        assert!(out.iterations <= 2, "took {} iterations", out.iterations);
    }

    #[test]
    fn gpm_fixed_point() {
        let z = sample_ground_truth(10, &mut seeded(33));
        let h = HermitianMatrix::outer(z.as_slice());
        let out = gpm(&h, &z, 5).unwrap();
        let aligned: f64 = out
            .phases
            .as_slice()
            .iter()
            .zip(z.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(aligned < 1e-12);
    }

    #[test]
    fn ppe_spc_exact_on_clean_complete_graph() {
        let mut rng = seeded(34);
        let n = 50;
        let z = sample_ground_truth(n, &mut rng);
        let g = ObservationGraph::complete(n);
        let stack = additive_gaussian_stack(&z, &g, 0.0, 4, &mut rng).unwrap();
        let result = ppe_spc(&stack, 1024).unwrap();
        let corr = correlation(&result.estimate, &z).unwrap();
        assert!(corr >= 1.0 - 1e-6, "correlation {corr}");
        assert_eq!(result.per_channel_eigenvalues.len(), 4);
        // Offsets satisfy the clean peak-location bound entrywise.
        let offsets = result.retrieved_offsets.as_ref().unwrap();
        let bound = 4.0 * std::f64::consts::PI / 9.0;
        for &(i, j, theta) in offsets {
            let truth = (z[i] * z[j].conj()).arg();
            let d = (theta - truth).rem_euclid(std::f64::consts::TAU);
            assert!(d.min(std::f64::consts::TAU - d) <= bound);
        }
    }

    #[test]
    fn mfgpm_clean_fixed_point() {
        let mut rng = seeded(35);
        let n = 30;
        let z = sample_ground_truth(n, &mut rng);
        let g = ObservationGraph::complete(n);
        let stack = additive_gaussian_stack(&z, &g, 0.0, 4, &mut rng).unwrap();
        let out = mfgpm(&stack, &z, &ThresholdSchedule::default(), 10, 4096).unwrap();
        let corr = correlation(&out.phases, &z).unwrap();
        assert!((corr - 1.0).abs() < 1e-9, "correlation {corr}");
    }

    #[test]
    fn repeated_ppe_with_one_rep_matches_ppe() {
        let mut rng = seeded(36);
        let n = 24;
        let z = sample_ground_truth(n, &mut rng);
        let g = ObservationGraph::complete(n);
        let stack = random_corruption_stack(&z, &g, 0.4, 4, &mut rng).unwrap();
        let once = ppe_spc(&stack, 512).unwrap();
        let rep = ppe_spc_repeated(&stack, 1, 512).unwrap();
        assert_eq!(once.estimate, rep.estimate);
    }

    #[test]
    fn repeated_ppe_keeps_clean_data_exact() {
        let mut rng = seeded(37);
        let n = 30;
        let z = sample_ground_truth(n, &mut rng);
        let g = ObservationGraph::complete(n);
        let stack = random_corruption_stack(&z, &g, 1.0, 4, &mut rng).unwrap();
        let result = ppe_spc_repeated(&stack, 3, 512).unwrap();
        let corr = correlation(&result.estimate, &z).unwrap();
        assert!(corr >= 1.0 - 1e-6, "correlation {corr}");
    }

    #[test]
    fn schedule_is_monotone_and_capped() {
        let s = ThresholdSchedule::default();
        let mut prev = 0.0;
        for t in 1..=50 {
            let tau = s.tau(t, 50);
            assert!(tau >= prev && tau <= s.cap);
            prev = tau;
        }
        assert_eq!(s.tau(50, 50), s.cap);
        assert!((s.tau(1, 50) - s.initial).abs() < 1e-12);
        // A convex late ramp stays near `initial` through most of the run.
        let late = ThresholdSchedule {
            initial: 0.1,
            cap: 0.99,
            ramp_fraction: 1.0,
            ramp_power: 8.0,
        };
        assert!(late.tau(25, 50) < 0.2);
        assert_eq!(late.tau(50, 50), 0.99);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = seeded(38);
        let z = sample_ground_truth(8, &mut rng);
        let g = ObservationGraph::complete(8);
        let stack = random_corruption_stack(&z, &g, 1.0, 2, &mut rng).unwrap();
        assert!(ppe_spc_repeated(&stack, 0, 256).is_err());
        assert!(mfgpm(&stack, &z, &ThresholdSchedule::default(), 0, 256).is_err());
        let bad = ThresholdSchedule {
            initial: 0.9,
            cap: 0.1,
            ramp_fraction: 0.5,
            ramp_power: 1.0,
        };
        assert!(mfgpm(&stack, &z, &bad, 5, 256).is_err());
    }
}

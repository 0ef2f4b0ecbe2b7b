//! Seeded parameter sweeps over (lambda, k_max) grids.
//!
//! Every (lambda, k_max, trial) triple derives its seed as
//! `mix_seed(base_seed, [lambda_index, k_index, trial])`, generates ground
//! truth, graph, stack, and one random initialization, then runs every
//! configured algorithm on that identical data. Trials run in parallel;
//! results are collected by index, so thread count never changes output.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groupsync::{
    group_correlation, group_ppe, group_refine, group_stack_corruption, group_stack_gaussian,
    sample_rotation, Rotation,
};
use crate::models::{
    additive_gaussian_stack, correlation, erdos_renyi, random_corruption_stack,
    sample_ground_truth, FrequencyStack, ObservationGraph, PhaseVector,
};
use crate::rng::{mix_seed, seeded};
use crate::sync::{
    gpm, mfgpm, ppe_spc, ppe_spc_repeated, spectral_sync, DEFAULT_GPM_ITERS,
    DEFAULT_MFGPM_ITERS,
};

use super::config::{AlgorithmName, AlgorithmSpec, ExperimentConfig, GraphSpec, Group, Noise};

/// Default iteration count for the SO(3) refinement.
pub const DEFAULT_GROUP_REFINE_ITERS: usize = 20;

/// Default repetition count for repeated PPE-SPC runs.
pub const DEFAULT_PPE_REPS: usize = 3;

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// NaN when the algorithm failed; `error` then explains why.
    pub correlation: f64,
    pub wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub algorithm: &'static str,
    pub lambda: f64,
    pub k_max: usize,
    pub trials: Vec<TrialRecord>,
}

impl CellResult {
    /// Median over finite trial correlations (NaN when every trial failed).
    pub fn median(&self) -> f64 {
        median(&self.finite())
    }

    /// Interquartile range over finite trial correlations.
    pub fn iqr(&self) -> f64 {
        let xs = self.finite();
        quantile(&xs, 0.75) - quantile(&xs, 0.25)
    }

    pub fn median_wall_ms(&self) -> f64 {
        median(&self.trials.iter().map(|t| t.wall_ms).collect::<Vec<_>>())
    }

    fn finite(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self
            .trials
            .iter()
            .map(|t| t.correlation)
            .filter(|c| c.is_finite())
            .collect();
        xs.sort_by(f64::total_cmp);
        xs
    }
}

/// Median of an unsorted slice; NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Linear-interpolation quantile of a sorted slice; NaN when empty.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Ordered: algorithms in config order, lambda outer, k_max inner.
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn cell(&self, algorithm: &str, lambda: f64, k_max: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.lambda == lambda && c.k_max == k_max)
    }

    pub fn algorithms(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        for c in &self.cells {
            if !names.contains(&c.algorithm) {
                names.push(c.algorithm);
            }
        }
        names
    }
}

struct TrialOutcome {
    correlation: f64,
    wall_ms: f64,
    error: Option<String>,
}

fn fail_all(cfg: &ExperimentConfig, msg: &str) -> Vec<TrialOutcome> {
    cfg.algorithms
        .iter()
        .map(|_| TrialOutcome {
            correlation: f64::NAN,
            wall_ms: 0.0,
            error: Some(msg.to_string()),
        })
        .collect()
}

fn run_u1_algorithm(
    spec: &AlgorithmSpec,
    stack: &FrequencyStack,
    init: &PhaseVector,
    truth: &PhaseVector,
) -> Result<f64> {
    let estimate = match spec.name {
        AlgorithmName::Spectral => spectral_sync(stack.channel(1))?.phases,
        AlgorithmName::Gpm => {
            gpm(
                stack.channel(1),
                init,
                spec.iterations.unwrap_or(DEFAULT_GPM_ITERS),
            )?
            .phases
        }
        AlgorithmName::PpeSpc => ppe_spc(stack, spec.grid_size)?.estimate,
        AlgorithmName::PpeSpcRepeated => {
            ppe_spc_repeated(stack, spec.reps.unwrap_or(DEFAULT_PPE_REPS), spec.grid_size)?
                .estimate
        }
        AlgorithmName::Mfgpm => {
            mfgpm(
                stack,
                init,
                &spec.schedule.unwrap_or_default(),
                spec.iterations.unwrap_or(DEFAULT_MFGPM_ITERS),
                spec.grid_size,
            )?
            .phases
        }
        other => {
            return Err(Error::Config(format!(
                "{} is not a U(1) algorithm",
                other.as_str()
            )))
        }
    };
    correlation(&estimate, truth)
}

fn run_trial_u1(cfg: &ExperimentConfig, lambda: f64, k_max: usize, seed: u64) -> Vec<TrialOutcome> {
    let n = cfg.n;
    let mut rng = seeded(seed);
    let truth = sample_ground_truth(n, &mut rng);
    let (graph, known_p) = match cfg.graph {
        GraphSpec::Complete => (ObservationGraph::complete(n), 1.0),
        GraphSpec::ErdosRenyi { p } => match erdos_renyi(n, p, &mut rng) {
            Ok(g) => (g, p),
            Err(e) => return fail_all(cfg, &e.to_string()),
        },
    };
    let stack = match cfg.noise {
        Noise::Corruption => {
            let r = lambda / (n as f64).sqrt();
            random_corruption_stack(&truth, &graph, r, k_max, &mut rng)
        }
        Noise::Gaussian => {
            let sigma = (n as f64).sqrt() / lambda;
            additive_gaussian_stack(&truth, &graph, sigma, k_max, &mut rng)
        }
    };
    let mut stack = match stack {
        Ok(s) => s,
        Err(e) => return fail_all(cfg, &e.to_string()),
    };
    // The generator's edge probability is known configuration, not an
    // estimate from the sampled graph.
    stack.meta.edge_probability = known_p;
    let init = sample_ground_truth(n, &mut rng);

    cfg.algorithms
        .iter()
        .map(|spec| {
            let start = std::time::Instant::now();
            match run_u1_algorithm(spec, &stack, &init, &truth) {
                Ok(c) => TrialOutcome {
                    correlation: c,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    error: None,
                },
                Err(e) => TrialOutcome {
                    correlation: f64::NAN,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn run_trial_so3(cfg: &ExperimentConfig, lambda: f64, k_max: usize, seed: u64) -> Vec<TrialOutcome> {
    let n = cfg.n;
    let mut rng = seeded(seed);
    let truth: Vec<Rotation> = (0..n).map(|_| sample_rotation(&mut rng)).collect();
    let stack = match cfg.noise {
        Noise::Corruption => {
            let r = lambda / (n as f64).sqrt();
            group_stack_corruption(&truth, r, k_max, &mut rng)
        }
        Noise::Gaussian => group_stack_gaussian(&truth, &vec![lambda; k_max], &mut rng),
    };
    let stack = match stack {
        Ok(s) => s,
        Err(e) => return fail_all(cfg, &e.to_string()),
    };
    let init: Vec<Rotation> = (0..n).map(|_| sample_rotation(&mut rng)).collect();

    cfg.algorithms
        .iter()
        .enumerate()
        .map(|(ai, spec)| {
            // Algorithm-internal sampling randomness is seeded separately so
            // adding or reordering algorithms never changes the shared data.
            let mut algo_rng = seeded(mix_seed(seed, &[0xa160 + ai as u64]));
            let start = std::time::Instant::now();
            let result = match spec.name {
                AlgorithmName::GroupPpe => {
                    group_ppe(&stack, spec.m_samples, &mut algo_rng)
                }
                AlgorithmName::GroupRefine => group_refine(
                    &stack,
                    &init,
                    &spec.schedule.unwrap_or_default(),
                    spec.iterations.unwrap_or(DEFAULT_GROUP_REFINE_ITERS),
                    spec.m_samples,
                    &mut algo_rng,
                )
                .map(|o| o.rotations),
                other => Err(Error::Config(format!(
                    "{} is not an SO(3) algorithm",
                    other.as_str()
                ))),
            };
            match result.and_then(|est| group_correlation(&est, &truth)) {
                Ok(c) => TrialOutcome {
                    correlation: c,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    error: None,
                },
                Err(e) => TrialOutcome {
                    correlation: f64::NAN,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Run the full sweep described by `cfg`. Deterministic: identical configs
/// produce identical results regardless of thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.lambda.len())
        .flat_map(|li| {
            (0..cfg.k_max.len())
                .flat_map(move |ki| (0..cfg.trials).map(move |t| (li, ki, t)))
        })
        .collect();

    let outcomes: Vec<(usize, usize, usize, u64, Vec<TrialOutcome>)> = jobs
        .par_iter()
        .map(|&(li, ki, trial)| {
            let seed = mix_seed(cfg.base_seed, &[li as u64, ki as u64, trial as u64]);
            let lambda = cfg.lambda[li];
            let k_max = cfg.k_max[ki];
            let outs = match cfg.group {
                Group::U1 => run_trial_u1(cfg, lambda, k_max, seed),
                Group::So3 => run_trial_so3(cfg, lambda, k_max, seed),
            };
            (li, ki, trial, seed, outs)
        })
        .collect();

    let mut cells: Vec<CellResult> = Vec::new();
    for (ai, spec) in cfg.algorithms.iter().enumerate() {
        for (li, &lambda) in cfg.lambda.iter().enumerate() {
            for (ki, &k_max) in cfg.k_max.iter().enumerate() {
                let mut trials: Vec<TrialRecord> = outcomes
                    .iter()
                    .filter(|(l, k, _, _, _)| *l == li && *k == ki)
                    .map(|(_, _, trial, seed, outs)| TrialRecord {
                        trial: *trial,
                        seed: *seed,
                        correlation: outs[ai].correlation,
                        wall_ms: outs[ai].wall_ms,
                        error: outs[ai].error.clone(),
                    })
                    .collect();
                trials.sort_by_key(|t| t.trial);
                cells.push(CellResult {
                    algorithm: spec.name.as_str(),
                    lambda,
                    k_max,
                    trials,
                });
            }
        }
    }
    Ok(SweepResult { cells })
}

/// Run `f` on a rayon pool with the requested number of threads (global pool
/// when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{AlgorithmSpec, ExperimentConfig};
    use std::path::PathBuf;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            group: Group::U1,
            noise: Noise::Corruption,
            n: 16,
            lambda: vec![1.0, 2.0],
            k_max: vec![1, 4],
            trials: 3,
            base_seed: 7,
            graph: GraphSpec::Complete,
            algorithms: vec![
                AlgorithmSpec {
                    grid_size: 256,
                    ..AlgorithmSpec::new(AlgorithmName::Spectral)
                },
                AlgorithmSpec {
                    grid_size: 256,
                    iterations: Some(8),
                    ..AlgorithmSpec::new(AlgorithmName::Mfgpm)
                },
            ],
            out_dir: PathBuf::from("out"),
            threads: None,
            record_timing: false,
        }
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let cfg = tiny_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.cells.len(), 2 * 2 * 2);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.algorithm, y.algorithm);
            for (u, v) in x.trials.iter().zip(&y.trials) {
                assert_eq!(u.correlation.to_bits(), v.correlation.to_bits());
                assert_eq!(u.seed, v.seed);
            }
        }
    }

    #[test]
    fn seed_isolation_under_trial_count_change() {
        let cfg = tiny_config();
        let mut more = cfg.clone();
        more.trials = 6;
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&more).unwrap();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            for t in 0..cfg.trials {
                assert_eq!(
                    ca.trials[t].correlation.to_bits(),
                    cb.trials[t].correlation.to_bits(),
                    "trial {t} changed when trial count grew"
                );
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = tiny_config();
        let seq = with_threads(Some(1), || run_sweep(&cfg)).unwrap().unwrap();
        let par = with_threads(Some(4), || run_sweep(&cfg)).unwrap().unwrap();
        for (x, y) in seq.cells.iter().zip(&par.cells) {
            for (u, v) in x.trials.iter().zip(&y.trials) {
                assert_eq!(u.correlation.to_bits(), v.correlation.to_bits());
            }
        }
    }

    #[test]
    fn clean_cells_reach_full_correlation() {
        let mut cfg = tiny_config();
        // r = lambda/sqrt(n) = 1 keeps every edge: every algorithm lands at 1.
        cfg.lambda = vec![4.0];
        cfg.trials = 1;
        let result = run_sweep(&cfg).unwrap();
        // Tolerance reflects the coarse 256-point grid used to keep this
        // test fast; acceptance runs the noise-free check at grid 4096.
        for cell in &result.cells {
            assert!(
                (cell.median() - 1.0).abs() < 1e-4,
                "{} at k_max {} reached only {}",
                cell.algorithm,
                cell.k_max,
                cell.median()
            );
        }
    }

    #[test]
    fn median_handles_failures() {
        let cell = CellResult {
            algorithm: "spectral",
            lambda: 1.0,
            k_max: 1,
            trials: vec![
                TrialRecord {
                    trial: 0,
                    seed: 1,
                    correlation: f64::NAN,
                    wall_ms: 0.0,
                    error: Some("boom".into()),
                },
                TrialRecord {
                    trial: 1,
                    seed: 2,
                    correlation: 0.5,
                    wall_ms: 0.0,
                    error: None,
                },
            ],
        };
        assert_eq!(cell.median(), 0.5);
        assert!(median(&[]).is_nan());
    }
}

//! Experiment configuration: TOML schema, validation, round-trip.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sync::ThresholdSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    U1,
    So3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    Gaussian,
    Corruption,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    Complete,
    ErdosRenyi { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    /// Single-frequency spectral relaxation (channel 1).
    Spectral,
    /// Single-frequency generalized power method (channel 1).
    Gpm,
    /// Multi-frequency periodogram peak extraction pipeline.
    PpeSpc,
    /// Repeated PPE-SPC on powered recovered offsets.
    PpeSpcRepeated,
    /// Multi-frequency generalized power method.
    Mfgpm,
    /// SO(3) initialization pipeline.
    GroupPpe,
    /// SO(3) iterative refinement (random init).
    GroupRefine,
}

impl AlgorithmName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmName::Spectral => "spectral",
            AlgorithmName::Gpm => "gpm",
            AlgorithmName::PpeSpc => "ppe-spc",
            AlgorithmName::PpeSpcRepeated => "ppe-spc-repeated",
            AlgorithmName::Mfgpm => "mfgpm",
            AlgorithmName::GroupPpe => "group-ppe",
            AlgorithmName::GroupRefine => "group-refine",
        }
    }

    pub fn is_group(&self) -> bool {
        matches!(self, AlgorithmName::GroupPpe | AlgorithmName::GroupRefine)
    }
}

fn default_grid() -> usize {
    4096
}

fn default_m_samples() -> usize {
    1000
}

/// One configured algorithm with its tuning knobs (unused knobs are ignored
/// by algorithms that do not take them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    /// Iteration count for gpm / mfgpm / group-refine.
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub schedule: Option<ThresholdSchedule>,
    /// Repetitions for ppe-spc-repeated.
    #[serde(default)]
    pub reps: Option<usize>,
    /// Haar sample count for the SO(3) pipelines.
    #[serde(default = "default_m_samples")]
    pub m_samples: usize,
}

impl AlgorithmSpec {
    pub fn new(name: AlgorithmName) -> Self {
        Self {
            name,
            grid_size: default_grid(),
            iterations: None,
            schedule: None,
            reps: None,
            m_samples: default_m_samples(),
        }
    }
}

/// A full sweep description. `lambda` and `k_max` grids span the heatmap;
/// every (lambda, k_max) cell runs `trials` seeded trials of each algorithm
/// on identical data and identical random initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub group: Group,
    pub noise: Noise,
    pub n: usize,
    pub lambda: Vec<f64>,
    pub k_max: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub graph: GraphSpec,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmSpec>,
    pub out_dir: PathBuf,
    /// Worker threads; defaults to available parallelism (the
    /// MFSYNC_THREADS environment variable overrides, a CLI flag overrides
    /// both).
    #[serde(default)]
    pub threads: Option<usize>,
    /// Record measured wall times in the CSV. Off by default: measured times
    /// differ between runs, and the default output is byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return fail(format!("n = {} is below 2", self.n));
        }
        if self.trials < 1 {
            return fail("trials must be at least 1".into());
        }
        if self.lambda.is_empty() || self.k_max.is_empty() {
            return fail("lambda and k_max grids must be nonempty".into());
        }
        if self.lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return fail("lambda values must be positive and finite".into());
        }
        if self.k_max.iter().any(|&k| k < 1) {
            return fail("k_max values must be at least 1".into());
        }
        if self.noise == Noise::Corruption {
            let sqrt_n = (self.n as f64).sqrt();
            if self.lambda.iter().any(|&l| l > sqrt_n) {
                return fail(format!(
                    "corruption rate r = lambda/sqrt(n) exceeds 1 for lambda > {sqrt_n}"
                ));
            }
        }
        if let GraphSpec::ErdosRenyi { p } = self.graph {
            if !(p > 0.0 && p <= 1.0) {
                return fail(format!("graph.p = {p} outside (0, 1]"));
            }
        }
        if self.algorithms.is_empty() {
            return fail("at least one [[algorithm]] block is required".into());
        }
        let max_k = *self.k_max.iter().max().expect("nonempty");
        for spec in &self.algorithms {
            if spec.name.is_group() != (self.group == Group::So3) {
                return fail(format!(
                    "algorithm {} does not apply to group {:?}",
                    spec.name.as_str(),
                    self.group
                ));
            }
            if spec.grid_size < 4 * max_k {
                return fail(format!(
                    "algorithm {}: grid_size {} below Nyquist-safe 4 * k_max = {}",
                    spec.name.as_str(),
                    spec.grid_size,
                    4 * max_k
                ));
            }
            if let Some(s) = &spec.schedule {
                s.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            if spec.name.is_group() && spec.m_samples < 100 {
                return fail(format!(
                    "algorithm {}: m_samples {} below 100",
                    spec.name.as_str(),
                    spec.m_samples
                ));
            }
            if let Some(r) = spec.reps {
                if r < 1 {
                    return fail("reps must be at least 1".into());
                }
            }
        }
        if self.group == Group::So3 {
            if max_k > crate::groupsync::MAX_DEGREE {
                return fail(format!(
                    "SO(3) k_max capped at {}, got {max_k}",
                    crate::groupsync::MAX_DEGREE
                ));
            }
            if self.graph != GraphSpec::Complete {
                return fail("SO(3) sweeps support complete graphs only".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_toml() -> &'static str {
        r#"
            group = "u1"
            noise = "corruption"
            n = 100
            lambda = [0.7, 0.9, 1.1]
            k_max = [1, 4, 16]
            trials = 5
            base_seed = 42
            out_dir = "out"

            [graph]
            kind = "erdos-renyi"
            p = 0.23

            [[algorithm]]
            name = "spectral"

            [[algorithm]]
            name = "mfgpm"
            grid_size = 2048
            iterations = 30
            schedule = { initial = 0.4, cap = 0.995, ramp_fraction = 0.7 }
        "#
    }

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(sample_toml()).unwrap();
        assert_eq!(cfg.algorithms.len(), 2);
        assert_eq!(cfg.algorithms[0].grid_size, 4096);
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "group = \"u1\"\nnoise = ???\n";
        let err = ExperimentConfig::from_toml_str(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "no line anchor in {msg:?}");
    }

    #[test]
    fn semantic_validation_catches_bad_grids() {
        let mut cfg = ExperimentConfig::from_toml_str(sample_toml()).unwrap();
        cfg.k_max = vec![4096];
        assert!(cfg.validate().is_err());

        let mut cfg2 = ExperimentConfig::from_toml_str(sample_toml()).unwrap();
        cfg2.lambda = vec![];
        assert!(cfg2.validate().is_err());

        let mut cfg3 = ExperimentConfig::from_toml_str(sample_toml()).unwrap();
        cfg3.algorithms[0].name = AlgorithmName::GroupPpe;
        assert!(cfg3.validate().is_err());

        // Corruption rate above 1 is impossible.
        let mut cfg4 = ExperimentConfig::from_toml_str(sample_toml()).unwrap();
        cfg4.lambda = vec![11.0];
        assert!(cfg4.validate().is_err());
    }
}

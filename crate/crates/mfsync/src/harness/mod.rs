//! Experiment harness: configuration, seeded sweeps, CSV and SVG reporting.

pub mod config;
pub mod report;
pub mod sweep;

use std::path::PathBuf;

use crate::error::Result;

pub use config::{AlgorithmName, AlgorithmSpec, ExperimentConfig, GraphSpec, Group, Noise};
pub use report::{emit_csv, emit_heatmap, parse_csv, CSV_HEADER};
pub use sweep::{
    median, run_sweep, with_threads, CellResult, SweepResult, TrialRecord,
    DEFAULT_GROUP_REFINE_ITERS, DEFAULT_PPE_REPS,
};

/// Run a sweep and write `sweep.csv` plus one heatmap SVG per algorithm into
/// the config's output directory. Returns the paths written.
pub fn run_sweep_to_files(cfg: &ExperimentConfig) -> Result<(SweepResult, Vec<PathBuf>)> {
    let result = with_threads(cfg.threads, || run_sweep(cfg))??;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    let csv_path = cfg.out_dir.join("sweep.csv");
    emit_csv(&result, &csv_path, cfg.record_timing)?;
    written.push(csv_path);
    for name in result.algorithms() {
        let path = cfg.out_dir.join(format!("heatmap_{name}.svg"));
        emit_heatmap(&result, name, &path)?;
        written.push(path);
    }
    Ok((result, written))
}

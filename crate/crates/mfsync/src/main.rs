//! Command-line driver for multi-frequency synchronization experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mfsync::harness::{run_sweep_to_files, ExperimentConfig, Group};
use mfsync::models::{
    correlation, random_corruption_stack, sample_ground_truth, ObservationGraph,
};
use mfsync::rng::seeded;
use mfsync::sync::{gpm, mfgpm, ppe_spc, spectral_sync, ThresholdSchedule};
use mfsync::Error;

#[derive(Parser)]
#[command(
    name = "mfsync",
    about = "Multi-frequency phase synchronization experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (flag > MFSYNC_THREADS > config > all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Record measured wall times in the CSV (breaks byte reproducibility).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Vertex count.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Corruption rate kept per edge.
    #[arg(long, default_value_t = 0.15)]
    r: f64,
    /// Frequency channels.
    #[arg(long, default_value_t = 16)]
    k_max: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured (lambda, k_max) sweep and write CSV + heatmaps.
    Sweep(SweepArgs),
    /// Run an SO(3) sweep (the config must set group = "so3").
    So3Sweep(SweepArgs),
    /// One seeded end-to-end run printing correlations for the U(1)
    /// algorithms on a random-corruption instance.
    Demo(DemoArgs),
    /// Parse and validate a config file without running anything.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the version.
    Version,
}

fn env_threads() -> Option<usize> {
    std::env::var("MFSYNC_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn load_config(args: &SweepArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if args.timing {
        cfg.record_timing = true;
    }
    cfg.threads = args.threads.or_else(env_threads).or(cfg.threads);
    cfg.validate()?;
    Ok(cfg)
}

fn run_sweep_command(args: &SweepArgs, want_group: Option<Group>) -> Result<(), Error> {
    let cfg = load_config(args)?;
    if let Some(group) = want_group {
        if cfg.group != group {
            return Err(Error::Config(format!(
                "this subcommand expects group {group:?}, config has {:?}",
                cfg.group
            )));
        }
    }
    let (result, written) = run_sweep_to_files(&cfg)?;
    for cell in &result.cells {
        println!(
            "{} lambda={} k_max={} median={:.6}",
            cell.algorithm,
            cell.lambda,
            cell.k_max,
            cell.median()
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_demo(args: &DemoArgs) -> Result<(), Error> {
    let mut rng = seeded(args.seed);
    let n = args.n;
    let truth = sample_ground_truth(n, &mut rng);
    let graph = ObservationGraph::complete(n);
    let stack = random_corruption_stack(&truth, &graph, args.r, args.k_max, &mut rng)?;
    let init = sample_ground_truth(n, &mut rng);
    let grid = 4096;

    println!(
        "demo: n={n} corruption r={} k_max={} seed={}",
        args.r, args.k_max, args.seed
    );
    let spectral = spectral_sync(stack.channel(1))?;
    println!(
        "spectral   correlation {:.6}",
        correlation(&spectral.phases, &truth)?
    );
    let g = gpm(stack.channel(1), &init, 200)?;
    println!(
        "gpm        correlation {:.6} ({} iterations)",
        correlation(&g.phases, &truth)?,
        g.iterations
    );
    let ppe = ppe_spc(&stack, grid)?;
    println!(
        "ppe-spc    correlation {:.6}",
        correlation(&ppe.estimate, &truth)?
    );
    let mf = mfgpm(&stack, &init, &ThresholdSchedule::default(), 50, grid)?;
    println!(
        "mfgpm      correlation {:.6}",
        correlation(&mf.phases, &truth)?
    );
    Ok(())
}

fn config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidParameter { .. } | Error::GridTooCoarse { .. }
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(args) => run_sweep_command(args, None),
        Command::So3Sweep(args) => run_sweep_command(args, Some(Group::So3)),
        Command::Demo(args) => run_demo(args),
        Command::ValidateConfig { config } => ExperimentConfig::from_path(config).map(|cfg| {
            println!(
                "ok: {:?} {:?} n={} {} lambda(s) x {} k_max value(s), {} algorithm(s)",
                cfg.group,
                cfg.noise,
                cfg.n,
                cfg.lambda.len(),
                cfg.k_max.len(),
                cfg.algorithms.len()
            );
        }),
        Command::Version => {
            println!("mfsync {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if config_error(&e) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}


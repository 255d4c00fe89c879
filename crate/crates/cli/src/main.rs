//! `pos2fs`: streaming feature selection over incomplete data.
//!
//! Subcommands: `run` executes an experiment matrix from a TOML config,
//! `synth` writes a synthetic dataset with a ground-truth sidecar, and
//! `report` re-aggregates an existing cells file.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 partial cell
//! failures (remaining cells still complete and reports are written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pos2fs_cli::config::{parse_config, resolve_plan, resolved_config_toml};
use pos2fs_cli::csv::{write_dataset_csv, write_truth_sidecar};
use pos2fs_cli::harness::execute_plan;
use pos2fs_cli::report::{write_report_from_cells, write_run_report};
use pos2fs_core::synth::{generate, SynthSpec};

#[derive(Parser)]
#[command(
    name = "pos2fs",
    version,
    about = "Online sparse streaming feature selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute all cells of an experiment config and write report files.
    Run {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for cell execution (overrides the config).
        #[arg(long)]
        workers: Option<usize>,
        /// Also dump per-cell swarm/imputation/decision traces.
        #[arg(long)]
        verbose: bool,
    },
    /// Generate a synthetic dataset CSV plus a `.truth.toml` sidecar.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        instances: usize,
        #[arg(long)]
        informative: usize,
        #[arg(long, default_value_t = 0)]
        noise: usize,
        #[arg(long, default_value_t = 0)]
        redundant: usize,
        #[arg(long)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian jitter on informative features.
        #[arg(long, default_value_t = 0.1)]
        noise_level: f64,
    },
    /// Rebuild aggregate tables from an existing cells.csv.
    Report {
        #[arg(long)]
        cells: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            workers,
            verbose,
        } => cmd_run(&config, workers, verbose),
        Command::Synth {
            out,
            instances,
            informative,
            noise,
            redundant,
            classes,
            seed,
            noise_level,
        } => cmd_synth(
            &out,
            SynthSpec {
                instances,
                informative,
                redundant,
                noise,
                classes,
                noise_level,
                seed,
            },
        ),
        Command::Report { cells, out } => cmd_report(&cells, &out),
    }
}

fn cmd_run(config_path: &Path, workers: Option<usize>, verbose: bool) -> ExitCode {
    let config = match parse_config(config_path) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("pos2fs: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config_dir = config_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let plan = match resolve_plan(config, &config_dir) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("pos2fs: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let worker_count = workers.unwrap_or(plan.config.workers);
    eprintln!(
        "pos2fs: running {} cells with {} workers",
        plan.cells.len(),
        worker_count
    );
    let outcomes = execute_plan(&plan, worker_count, verbose);
    for outcome in &outcomes {
        if let Err(message) = &outcome.result {
            eprintln!("pos2fs: cell {} failed: {message}", outcome.spec.label());
        }
    }

    let resolved = resolved_config_toml(&plan.config);
    let out_dir = plan.config.output_dir.clone();
    match write_run_report(&out_dir, &outcomes, &resolved, verbose) {
        Ok(0) => {
            eprintln!("pos2fs: report written to {}", out_dir.display());
            ExitCode::SUCCESS
        }
        Ok(failed) => {
            eprintln!(
                "pos2fs: report written to {} ({failed} cells failed)",
                out_dir.display()
            );
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e) => {
            eprintln!("pos2fs: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn cmd_synth(out: &Path, spec: SynthSpec) -> ExitCode {
    let synth = match generate(&spec) {
        Ok(synth) => synth,
        Err(e) => {
            eprintln!("pos2fs: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) =
        write_dataset_csv(out, &synth.dataset).and_then(|()| write_truth_sidecar(out, &synth))
    {
        eprintln!("pos2fs: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    eprintln!(
        "pos2fs: wrote {} ({} instances, {} features) and sidecar",
        out.display(),
        synth.dataset.instance_count(),
        synth.dataset.feature_count()
    );
    ExitCode::SUCCESS
}

fn cmd_report(cells: &Path, out: &Path) -> ExitCode {
    match write_report_from_cells(out, cells) {
        Ok(()) => {
            eprintln!("pos2fs: report written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pos2fs: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

//! `rim`: generate synthetic interfered radar datasets, train the
//! detection network, and score mitigation methods.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 on numerical
//! failures (non-finite training loss, diverged reconstruction, singular
//! whitening statistics).

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rim_cli::config::{ExperimentConfig, Objective};
use rim_cli::evaluate::{cmd_evaluate, EvalTarget};
use rim_cli::mitigate::cmd_mitigate;
use rim_cli::pipeline::Method;
use rim_cli::report::cmd_report;
use rim_cli::train::cmd_train;
use rim_core::dataset::build_dataset;
use rim_core::{Error, Result};

#[derive(Parser)]
#[command(name = "rim", version, about = "FMCW radar interference mitigation workbench")]
struct Cli {
    /// JSON config file; omitted keys fall back to built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train/val/test splits described by the config.
    Generate {
        /// Overwrite an existing dataset.
        #[arg(long)]
        force: bool,
    },
    /// Train the network and keep the best-validation checkpoint.
    Train {
        /// Objective override: bce, mse, or magmse.
        #[arg(long)]
        objective: Option<String>,
    },
    /// Score a mitigation method or a trained checkpoint on one split.
    Evaluate {
        #[arg(long, default_value = "test")]
        split: String,
        /// One of none, zeroing, imat, ramp.
        #[arg(long, conflicts_with = "checkpoint")]
        method: Option<String>,
        /// Trained network to evaluate instead of a classical method.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// CSV destination; defaults into the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write mitigated time-domain cubes of one split to a container file.
    Mitigate {
        #[arg(long, default_value = "test")]
        split: String,
        /// One of none, zeroing, imat, ramp.
        #[arg(long)]
        method: String,
        /// Container destination; defaults into the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing container.
        #[arg(long)]
        force: bool,
    },
    /// Summary table over the test split plus map dumps of one sample.
    Report {
        /// Checkpoints to include as network rows; repeatable.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Test sample index to dump.
        #[arg(long, default_value_t = 0)]
        sample: usize,
        /// Report directory; defaults to `<output_dir>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate { force } => {
            cfg.validate()?;
            let manifest = build_dataset(
                &cfg.dataset_dir,
                &cfg.radar,
                &cfg.distribution,
                &cfg.sizes,
                cfg.seed,
                force,
            )?;
            println!(
                "wrote {} samples to {}",
                manifest.total_samples(),
                cfg.dataset_dir.display()
            );
        }
        Command::Train { objective } => {
            if let Some(name) = objective {
                cfg.objective = Objective::parse(&name)?;
            }
            let outcome = cmd_train(&cfg)?;
            println!(
                "best val F1 {:.4} at epoch {}; checkpoint {}",
                outcome.record.best_val_f1,
                outcome.record.best_epoch,
                outcome.checkpoint_path.display()
            );
        }
        Command::Evaluate {
            split,
            method,
            checkpoint,
            out,
        } => {
            let target = match (method, checkpoint) {
                (_, Some(path)) => EvalTarget::Checkpoint(path),
                (Some(name), None) => EvalTarget::Method(Method::parse(&name)?),
                (None, None) => {
                    return Err(Error::invalid(
                        "method",
                        "pass --method <name> or --checkpoint <file>",
                    ))
                }
            };
            let outcome = cmd_evaluate(&cfg, &split, &target, out)?;
            println!(
                "{} on {split}: F1 {:.4}; rows in {}",
                outcome.scores.label,
                outcome.scores.f1(),
                outcome.csv_path.display()
            );
        }
        Command::Mitigate {
            split,
            method,
            out,
            force,
        } => {
            let method = Method::parse(&method)?;
            let outcome = cmd_mitigate(&cfg, &split, method, out, force)?;
            println!(
                "wrote {} mitigated cubes to {} (sha256 {})",
                outcome.samples,
                outcome.path.display(),
                outcome.sha256
            );
        }
        Command::Report {
            checkpoints,
            sample,
            out,
        } => {
            let outcome = cmd_report(&cfg, &checkpoints, sample, out)?;
            println!("summary table: {}", outcome.summary_path.display());
            for row in &outcome.rows {
                println!("  {:<24} F1 {:.4}", row.label, row.f1());
            }
            println!("{} map dumps alongside it", outcome.dumps.len());
        }
    }
    Ok(())
}

/// Numerical failures get their own exit code so scripted sweeps can tell
/// a diverged run from a bad invocation.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFinite { .. } | Error::ImatDiverged { .. } | Error::SingularCovariance => 2,
        _ => 1,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with 2 on usage errors by default; 2 is reserved for
    // numerical failures here, so usage problems are remapped to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

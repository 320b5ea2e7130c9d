//! Command-line entry point for the fMRI-to-word decoding pipeline.
//!
//! Every subcommand reads an optional flat `key = value` config file,
//! applies flag overrides, runs, and echoes the effective configuration
//! into its output directory. Exit codes: 0 success, 1 configuration or
//! data problems (including usage errors), 2 internal invariant
//! violations.

use braindecode_cli::commands;
use braindecode_cli::config::{load_run_config, parse_variant, RunConfig};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "braindecode",
    version,
    about = "fMRI-to-word decoding: synthetic data, ROI-partitioned decoder training, \
             leave-one-out evaluation, and anchor-guided text generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags every subcommand accepts.
#[derive(Args)]
struct Common {
    /// Flat key = value config file; flags override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed: sets the synth, train and generation seeds at once.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing); receives the config echo.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train one rotation (--subject) or the full leave-one-out.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset directory.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Hold out this subject and train that single rotation.
        #[arg(long)]
        subject: Option<String>,
        /// Early-stopping subject (required; never rotates out).
        #[arg(long)]
        validation_subject: Option<String>,
        /// Ablation-ladder variant: base, roi, rec, mean or pretrain.
        #[arg(long)]
        variant: Option<String>,
        /// Worker threads for the full leave-one-out.
        #[arg(long, value_name = "N")]
        parallel_rotations: Option<usize>,
    },
    /// Score a checkpoint on one subject (pairwise + Top-K).
    Eval {
        #[command(flatten)]
        common: Common,
        /// Dataset directory.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Checkpoint file to load.
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        /// Subject whose scans are scored.
        #[arg(long)]
        subject: Option<String>,
        /// Comma-separated Top-K cutoffs (e.g. 1,5).
        #[arg(long)]
        k: Option<String>,
    },
    /// Run the five-rung ablation ladder.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Dataset directory.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Subject every rung trains against and is scored on.
        #[arg(long)]
        validation_subject: Option<String>,
    },
    /// Generate anchored text from a corpus and report hit metrics.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Dataset directory providing the embedding table.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Plain-text corpus for the n-gram language model.
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// Anchoring strength k (0 disables anchoring).
        #[arg(long)]
        anchor_strength: Option<f64>,
    },
    /// Run the standard finite-difference gradient suite.
    Gradcheck {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

/// Merge the common flags over the config file (or the defaults).
fn base_config(common: &Common) -> braindecode::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_run_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.set_master_seed(seed);
    }
    if let Some(out) = &common.out {
        cfg.paths.out = out.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> braindecode::Result<()> {
    match cli.command {
        Command::Synth { common } => {
            let cfg = base_config(&common)?;
            commands::synth::run(&cfg)
        }
        Command::Train {
            common,
            data,
            subject,
            validation_subject,
            variant,
            parallel_rotations,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(data) = data {
                cfg.paths.data = data;
            }
            if let Some(subject) = subject {
                cfg.run.subject = Some(subject);
            }
            if let Some(validation_subject) = validation_subject {
                cfg.run.validation_subject = Some(validation_subject);
            }
            if let Some(variant) = variant {
                cfg.run.variant = Some(parse_variant(&variant)?);
            }
            if let Some(parallel_rotations) = parallel_rotations {
                cfg.run.parallel_rotations = parallel_rotations;
            }
            commands::train::run(&cfg)
        }
        Command::Eval {
            common,
            data,
            checkpoint,
            subject,
            k,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(data) = data {
                cfg.paths.data = data;
            }
            if let Some(checkpoint) = checkpoint {
                cfg.paths.checkpoint = Some(checkpoint);
            }
            if let Some(subject) = subject {
                cfg.run.subject = Some(subject);
            }
            if let Some(k) = k {
                cfg.run.k = parse_k_list(&k)?;
            }
            commands::eval::run(&cfg)
        }
        Command::Ablate {
            common,
            data,
            validation_subject,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(data) = data {
                cfg.paths.data = data;
            }
            if let Some(validation_subject) = validation_subject {
                cfg.run.validation_subject = Some(validation_subject);
            }
            commands::ablate::run(&cfg)
        }
        Command::Generate {
            common,
            data,
            corpus,
            anchor_strength,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(data) = data {
                cfg.paths.data = data;
            }
            if let Some(corpus) = corpus {
                cfg.paths.corpus = Some(corpus);
            }
            if let Some(anchor_strength) = anchor_strength {
                cfg.gen.anchor_strength = anchor_strength;
            }
            commands::generate::run(&cfg)
        }
        Command::Gradcheck { common } => {
            let cfg = base_config(&common)?;
            commands::gradcheck::run(&cfg)
        }
    }
}

fn parse_k_list(value: &str) -> braindecode::Result<Vec<usize>> {
    let items: Vec<usize> = value
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            braindecode::Error::Config(format!(
                "--k wants comma-separated unsigned integers, got '{value}'"
            ))
        })?;
    if items.is_empty() {
        return Err(braindecode::Error::Config(
            "--k needs at least one cutoff".to_string(),
        ));
    }
    Ok(items)
}

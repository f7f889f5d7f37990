//! Command-line front end: argument parsing, config loading and exit codes.
//!
//! Exit status is 0 on success, 1 for usage, config and missing-artifact
//! errors, and 2 for failures while a stage runs.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{run, BaselineChoice, Command};
pub use config::{ArtifactLayout, Overrides, PipelineConfig, Side, CONFIG_KEYS};

use crate::error::Error;
use crate::eval::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "xlingual", version, about = "Cross-lingual suspended-account detection pipeline")]
pub struct Cli {
    /// Pipeline config file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `workers`.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides `paths.out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, Subcommand)]
pub enum CliCommand {
    /// Check the config and print it with defaults filled in.
    ValidateConfig,
    /// Write a synthetic bilingual corpus and dictionaries.
    Synth,
    /// Aggregate posts into account documents and split train/test.
    Ingest,
    /// Train subword skipgram vectors for one language.
    TrainEmbeddings {
        #[arg(long)]
        lang: Side,
    },
    /// Align source vectors to target vectors.
    Align,
    /// Train a target-language classifier.
    TrainClassifier {
        #[arg(long)]
        kind: ModelKind,
    },
    /// Score a trained classifier on the target test split.
    Evaluate {
        #[arg(long)]
        kind: ModelKind,
    },
    /// Train and score a baseline: bow, bow-tfidf, ngrams, ngrams-tfidf or external.
    Baseline {
        #[arg(long)]
        kind: BaselineChoice,
    },
    /// Monolingual and transfer learning curves over training fractions.
    Sweep,
    /// Write per-account document vectors of a trained classifier.
    ExportVectors {
        #[arg(long)]
        kind: ModelKind,
    },
}

impl CliCommand {
    fn stage(&self) -> Option<Command> {
        Some(match self {
            CliCommand::ValidateConfig => return None,
            CliCommand::Synth => Command::Synth,
            CliCommand::Ingest => Command::Ingest,
            CliCommand::TrainEmbeddings { lang } => Command::TrainEmbeddings(*lang),
            CliCommand::Align => Command::Align,
            CliCommand::TrainClassifier { kind } => Command::TrainClassifier(*kind),
            CliCommand::Evaluate { kind } => Command::Evaluate(*kind),
            CliCommand::Baseline { kind } => Command::Baseline(*kind),
            CliCommand::Sweep => Command::Sweep,
            CliCommand::ExportVectors { kind } => Command::ExportVectors(*kind),
        })
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::MissingArtifacts(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let Some(config_path) = cli.config.clone() else {
        eprintln!("error: --config PATH is required");
        return EXIT_VALIDATION;
    };
    let overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        out_dir: cli.out.clone(),
    };
    let cfg = match PipelineConfig::load(&config_path, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let Some(stage) = cli.command.stage() else {
        print!("{}", cfg.to_text());
        return EXIT_OK;
    };
    match run(stage, &cfg, &config_path) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

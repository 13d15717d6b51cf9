//! `botwatch`: runs the bot-detection pipeline stage by stage from a TOML
//! configuration. Every stage writes its artifacts into the output
//! directory and records their SHA-256 hashes in `manifest.json`.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod failure;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use artifacts::Workspace;
use config::{Overrides, Settings};
use failure::{ErrorReport, Validation, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "botwatch", version, about = "Social bot detection pipeline")]
pub struct Cli {
    /// Pipeline configuration (TOML). Relative paths inside it resolve
    /// against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// RFC 3339 split point for the temporal generalization run.
    #[arg(long = "window-boundary", global = true)]
    pub window_boundary: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse and validate the corpus.
    Ingest,
    /// Fuse scorer outputs and suspensions into labels.
    Label,
    /// Extract the feature matrix.
    Featurize,
    /// Fit the booster on all labeled users.
    Train,
    /// Grid search by cross-validated ROC-AUC.
    Tune,
    /// Repeated hold-out evaluation, plus the temporal split when a window
    /// boundary is set.
    Evaluate,
    /// Shapley attributions for every labeled user.
    Explain,
    /// Estimate labeling time for both scorer orderings.
    ScheduleLabels,
    /// Summarize every artifact present.
    Report,
    /// Every stage in order; `tune` only when a grid is configured.
    Run,
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Validation("--threads must be positive".into()).into());
        }
        // fails only when a pool already exists, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let settings = config::load(
        cli.config.as_deref(),
        &Overrides {
            seed: cli.seed,
            out: cli.out.clone(),
            window_boundary: cli.window_boundary.clone(),
        },
    )?;
    let ws = Workspace::open(&settings.out, settings.config.seed, &settings.config.settings_json())?;
    let stages: Vec<Command> = match cli.command {
        Command::Run => {
            let mut s = vec![Command::Ingest, Command::Label, Command::Featurize];
            if settings.config.grid.is_some() {
                s.push(Command::Tune);
            }
            s.extend([
                Command::Train,
                Command::Evaluate,
                Command::Explain,
                Command::ScheduleLabels,
                Command::Report,
            ]);
            s
        }
        c => vec![c],
    };
    for stage in stages {
        println!("{}", run_stage(stage, &settings, &ws)?);
    }
    Ok(())
}

fn run_stage(stage: Command, s: &Settings, ws: &Workspace) -> Result<String> {
    match stage {
        Command::Ingest => commands::ingest(s, ws),
        Command::Label => commands::label(s, ws),
        Command::Featurize => commands::featurize_cmd(s, ws),
        Command::Train => commands::train_cmd(s, ws),
        Command::Tune => commands::tune_cmd(s, ws),
        Command::Evaluate => commands::evaluate_cmd(s, ws),
        Command::Explain => commands::explain_cmd(s, ws),
        Command::ScheduleLabels => commands::schedule_cmd(s, ws),
        Command::Report => commands::report_cmd(s, ws),
        Command::Run => unreachable!("expanded by execute"),
    }
}

/// Parses `args`, runs the command and returns the exit status. Failures
/// are reported as one JSON object on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let report = ErrorReport::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
            return EXIT_USAGE;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let report = ErrorReport::classify(&err);
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
            report.exit_code
        }
    }
}

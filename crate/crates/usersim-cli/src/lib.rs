//! Command-line harness for the user-simulation pipeline.
//!
//! Three subcommands mirror the pipeline stages so each stage's
//! artifacts can be inspected and replayed independently:
//!
//! * `generate` — diversity-steered persona batch → `personas.jsonl` +
//!   `generation_stats.json`
//! * `simulate` — one dialogue session per persona against the bundled
//!   study-program bot → `sessions.jsonl`
//! * `analyze`  — distribution/diversity/session reports → CSV bundle +
//!   `summary.json`
//!
//! Exit codes: 0 ok, 1 campaign error, 2 config error.

mod backends;
mod commands;
pub mod config;

pub use commands::{
    cmd_analyze, cmd_generate, cmd_simulate, CliError, PERSONAS_FILE, SESSIONS_FILE, STATS_FILE,
};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "usersim",
    version,
    about = "Simulate synthetic users against a study-program advisory bot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a persona batch with diversity-steered prompts
    Generate {
        /// Campaign config file (JSON, ${VAR} substituted from the environment)
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output_dir from the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one dialogue session per persona
    Simulate {
        /// Campaign config file (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Personas JSONL, as produced by `generate`
        #[arg(long)]
        personas: PathBuf,
        /// Output directory; overrides output_dir from the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute distribution, diversity and session reports
    Analyze {
        /// Personas JSONL
        #[arg(long)]
        personas: PathBuf,
        /// Session transcripts JSONL; metrics are skipped without it
        #[arg(long)]
        sessions: Option<PathBuf>,
        /// Report directory
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point for the `usersim` binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Like [`run`] but with explicit arguments, so tests can drive the CLI
/// without spawning a process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_tracing();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate { config, out } => cmd_generate(&config, out.as_deref()),
        Command::Simulate {
            config,
            personas,
            out,
        } => cmd_simulate(&config, &personas, out.as_deref()),
        Command::Analyze {
            personas,
            sessions,
            out,
        } => cmd_analyze(&personas, sessions.as_deref(), &out),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            report_error(&err);
            err.exit_code()
        }
    }
}

fn report_error(err: &CliError) {
    eprintln!("error: {err}");
    let mut source = std::error::Error::source(err);
    while let Some(cause) = source {
        eprintln!("  caused by: {cause}");
        source = cause.source();
    }
}

fn init_tracing() {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    // try_init: tests call run_from repeatedly in one process.
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

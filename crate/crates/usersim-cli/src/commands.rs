//! The pipeline stages behind the subcommands:
//! `generate` → `simulate` → `analyze`.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;
use usersim_core::analytics::AnalyticsError;
use usersim_core::clock::{Clock, FixedClock, SystemClock};
use usersim_core::dialogue::{
    read_transcripts, write_transcripts, DialogueSession, SessionRunner, TranscriptError,
};
use usersim_core::generator::{AttributeStatistics, BatchOutcome, PersonaGenerator};
use usersim_core::jsonl::{read_jsonl, write_atomic, write_jsonl, JsonlError};
use usersim_core::persona::{Persona, PersonaTemplate};
use usersim_core::report::{build_report, write_report, ReportError};
use usersim_core::studybot::{CatalogError, ProgramCatalog, StudyBot};

use crate::backends::build_backend;
use crate::config::{load_config, CampaignConfig, ConfigError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Campaign(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems (bad config file,
    /// bad script, bad catalog), 1 for failures during the campaign.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Catalog(_) => 2,
            _ => 1,
        }
    }
}

/// File names written into the output directory.
pub const PERSONAS_FILE: &str = "personas.jsonl";
pub const STATS_FILE: &str = "generation_stats.json";
pub const SESSIONS_FILE: &str = "sessions.jsonl";

fn write_stats(path: &Path, stats: &AttributeStatistics) -> Result<(), JsonlError> {
    let mut bytes = serde_json::to_vec_pretty(stats).expect("statistics serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Pick the deterministic replay clock when every backend involved is
/// scripted, the wall clock otherwise.
fn clock_for(scripted: bool) -> Box<dyn Clock> {
    if scripted {
        Box::new(FixedClock::replay_default())
    } else {
        Box::new(SystemClock)
    }
}

/// Generate a persona batch and write `personas.jsonl` plus
/// `generation_stats.json`. A mid-batch failure still writes the
/// completed prefix before reporting the error.
pub fn cmd_generate(config_path: &Path, out_override: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let backend_cfg = cfg.require_backend("generator")?;
    let backend = build_backend("generator", backend_cfg)?;
    let clock = clock_for(backend_cfg.is_scripted());
    let out_dir = out_dir(&cfg, out_override);
    let personas_path = out_dir.join(PERSONAS_FILE);
    let stats_path = out_dir.join(STATS_FILE);

    let generator = PersonaGenerator::new(
        backend.as_ref(),
        clock.as_ref(),
        cfg.generation.to_core(),
        PersonaTemplate::default_template(),
    );
    match generator.generate_batch() {
        Ok(BatchOutcome { personas, stats }) => {
            write_jsonl(&personas_path, &personas)?;
            write_stats(&stats_path, &stats)?;
            println!(
                "generated {} personas -> {}",
                personas.len(),
                personas_path.display()
            );
            Ok(())
        }
        Err(aborted) => {
            // Keep whatever the batch produced, but never replace an
            // earlier run's output with empty files.
            if !aborted.completed.is_empty() {
                write_jsonl(&personas_path, &aborted.completed)?;
                write_stats(&stats_path, &aborted.stats)?;
            }
            Err(CliError::Campaign(format!(
                "generation aborted after {} of {} persona(s): {}",
                aborted.completed.len(),
                cfg.generation.batch_size,
                aborted.failure
            )))
        }
    }
}

/// Simulate one session per persona and write `sessions.jsonl`.
pub fn cmd_simulate(
    config_path: &Path,
    personas_path: &Path,
    out_override: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let user_cfg = cfg.require_backend("user")?;
    let judge_cfg = cfg.require_backend("judge")?;

    let catalog = match &cfg.catalog_path {
        Some(path) => ProgramCatalog::load(path)?,
        None => ProgramCatalog::bundled(),
    };
    let personas = read_personas_lenient(personas_path)?;
    if personas.is_empty() {
        return Err(CliError::Campaign(format!(
            "no valid personas in {}",
            personas_path.display()
        )));
    }

    let user_backend = build_backend("user", user_cfg)?;
    let judge_backend = build_backend("judge", judge_cfg)?;
    let bot = match &cfg.backends.responder {
        Some(responder_cfg) => {
            StudyBot::new(catalog).with_paraphraser(build_backend("responder", responder_cfg)?)
        }
        None => StudyBot::new(catalog),
    };

    let scripted = cfg.simulation_all_scripted();
    let clock = clock_for(scripted);
    let mut workers = (cfg.parallel_sessions as usize).min(personas.len());
    if scripted && workers > 1 {
        tracing::warn!("scripted backends replay by call order; forcing sequential simulation");
        workers = 1;
    }

    let runner = SessionRunner::new(
        user_backend.as_ref(),
        judge_backend.as_ref(),
        &bot,
        clock.as_ref(),
        cfg.session.to_core(),
    );
    let sessions = if workers <= 1 {
        personas.iter().map(|p| runner.run(p)).collect()
    } else {
        run_parallel(&runner, &personas, workers)
    };

    let out_dir = out_dir(&cfg, out_override);
    let sessions_path = out_dir.join(SESSIONS_FILE);
    write_transcripts(&sessions_path, &sessions)?;

    let mut tally: BTreeMap<&'static str, usize> = BTreeMap::new();
    for s in &sessions {
        *tally.entry(s.outcome.label()).or_insert(0) += 1;
    }
    let breakdown = tally
        .iter()
        .map(|(outcome, n)| format!("{n} {outcome}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!(
        "simulated {} session(s): {breakdown} -> {}",
        sessions.len(),
        sessions_path.display()
    );
    Ok(())
}

/// Fan personas out over `workers` threads; results keep input order.
fn run_parallel(
    runner: &SessionRunner<'_>,
    personas: &[Persona],
    workers: usize,
) -> Vec<DialogueSession> {
    let cursor = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<DialogueSession>>> =
        personas.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(persona) = personas.get(i) else {
                    break;
                };
                let session = runner.run(persona);
                *slots[i].lock().unwrap() = Some(session);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("one session per persona"))
        .collect()
}

/// Build the report bundle from personas (and sessions when given).
pub fn cmd_analyze(
    personas_path: &Path,
    sessions_path: Option<&Path>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let personas: Vec<Persona> = read_jsonl(personas_path)?;
    let sessions = match sessions_path {
        Some(path) => Some(read_transcripts(path)?),
        None => {
            println!("no sessions supplied; session metrics and goal tables are skipped");
            None
        }
    };
    let report = build_report(&personas, sessions.as_deref())?;
    let written = write_report(out_dir, &personas, &report)?;
    println!(
        "wrote {} report file(s) -> {}",
        written.len(),
        out_dir.display()
    );
    Ok(())
}

fn out_dir(cfg: &CampaignConfig, out_override: Option<&Path>) -> PathBuf {
    out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone())
}

/// Read personas line by line; a line that fails to parse is skipped
/// with a warning so one bad record cannot kill a campaign.
fn read_personas_lenient(path: &Path) -> Result<Vec<Persona>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Campaign(format!("cannot read personas {}: {e}", path.display())))?;
    let mut personas = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| {
            CliError::Campaign(format!("cannot read personas {}: {e}", path.display()))
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Persona>(&line) {
            Ok(p) => personas.push(p),
            Err(e) => tracing::warn!(
                path = %path.display(),
                line = idx + 1,
                error = %e,
                "skipping invalid persona line"
            ),
        }
    }
    Ok(personas)
}

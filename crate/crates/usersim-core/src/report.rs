//! Assembles campaign analytics into a report bundle and writes it to a
//! directory with stable, documented file names:
//!
//! - `distribution_<attribute>.csv` — value, count, percent (of personas)
//! - `distribution_over_time_<attribute>.csv` — index, persona_id,
//!   value, cumulative_count (one row per value per generation step)
//! - `cross_tab_<row>_by_<col>.csv` — contingency matrix, first column
//!   the row value, then one column per column value
//! - `goal_outcomes_<facet>_<achieved|missed>.csv` — value, count
//! - `diversity.csv` — entropy and chi-square scores per attribute
//! - `summary.json` — the whole report, including session metrics
//!
//! Every file is written atomically and deterministically (sorted keys,
//! ranked rows), so re-running the same analysis produces byte-identical
//! output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    attribute_distribution, cross_tab, distribution_over_time, goal_outcome_table, session_metrics,
    shannon_entropy, AnalyticsError, CrossTab, Distribution, DiversityScore, Facet, SessionMetrics,
    TimePoint,
};
use crate::dialogue::DialogueSession;
use crate::generator::{TRACKED_MULTI_VALUED, TRACKED_SINGLE_VALUED};
use crate::jsonl::{write_atomic, JsonlError};
use crate::persona::Persona;

/// Attribute pairs cross-tabulated in every report.
pub const CROSS_TAB_PAIRS: [(&str, &str); 3] = [
    ("gender", "desired_degree"),
    ("region", "general_interests"),
    ("gender", "general_interests"),
];

/// Cells kept in each cross-tab's top view.
pub const CROSS_TAB_TOP_N: usize = 10;

/// Rows kept per goal-outcome table.
pub const GOAL_TABLE_TOP_N: usize = 10;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv serialization failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalTable {
    pub facet: Facet,
    pub achieved: bool,
    pub rows: Vec<(String, u64)>,
}

/// The assembled analytics of one campaign: distributions and
/// diversity scores for all tracked attributes, the standard cross
/// tabs, and (when sessions are supplied) session metrics and
/// goal-outcome tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_personas: usize,
    pub n_sessions: usize,
    pub distributions: Vec<Distribution>,
    pub diversity: Vec<DiversityScore>,
    pub cross_tabs: Vec<CrossTab>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_metrics: Option<SessionMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goal_tables: Vec<GoalTable>,
}

/// Build the report. `sessions: None` produces a personas-only report
/// (distributions, diversity, cross-tabs); an empty persona set or an
/// empty session list is an error.
pub fn build_report(
    personas: &[Persona],
    sessions: Option<&[DialogueSession]>,
) -> Result<AnalysisReport, AnalyticsError> {
    if personas.is_empty() {
        return Err(AnalyticsError::EmptyInput("no personas".to_string()));
    }
    let tracked: Vec<&str> = TRACKED_SINGLE_VALUED
        .iter()
        .chain(TRACKED_MULTI_VALUED.iter())
        .copied()
        .collect();

    let mut distributions = Vec::new();
    let mut diversity = Vec::new();
    for attribute in &tracked {
        let d = attribute_distribution(personas, attribute)?;
        diversity.push(shannon_entropy(&d)?);
        distributions.push(d);
    }

    let mut cross_tabs = Vec::new();
    for (row, col) in CROSS_TAB_PAIRS {
        cross_tabs.push(cross_tab(personas, row, col, CROSS_TAB_TOP_N)?);
    }

    let (metrics, goal_tables, n_sessions) = match sessions {
        None => (None, Vec::new(), 0),
        Some(sessions) => {
            let metrics = session_metrics(sessions, personas)?;
            let mut tables = Vec::new();
            for facet in [Facet::SecondaryGoal, Facet::GeneralInterest] {
                for achieved in [true, false] {
                    tables.push(GoalTable {
                        facet,
                        achieved,
                        rows: goal_outcome_table(
                            sessions,
                            personas,
                            facet,
                            achieved,
                            GOAL_TABLE_TOP_N,
                        )?,
                    });
                }
            }
            (Some(metrics), tables, sessions.len())
        }
    };

    Ok(AnalysisReport {
        n_personas: personas.len(),
        n_sessions,
        distributions,
        diversity,
        cross_tabs,
        session_metrics: metrics,
        goal_tables,
    })
}

fn write_csv<F>(path: &Path, build: F) -> Result<(), ReportError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    build(&mut writer)?;
    let bytes = writer.into_inner().map_err(|e| ReportError::Io {
        path: path.display().to_string(),
        source: e.into_error(),
    })?;
    write_atomic(path, &bytes)?;
    Ok(())
}

fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5).floor() / 100.0
}

fn distribution_csv(path: &Path, d: &Distribution) -> Result<(), ReportError> {
    write_csv(path, |w| {
        w.write_record(["value", "count", "percent"])?;
        for (value, count) in d.ranked() {
            let percent = if d.total == 0 {
                0.0
            } else {
                round2(count as f64 / d.total as f64 * 100.0)
            };
            w.write_record([value.as_str(), &count.to_string(), &percent.to_string()])?;
        }
        Ok(())
    })
}

fn over_time_csv(path: &Path, points: &[TimePoint]) -> Result<(), ReportError> {
    write_csv(path, |w| {
        w.write_record(["index", "persona_id", "value", "cumulative_count"])?;
        for point in points {
            for value in &point.values {
                w.write_record([
                    point.index.to_string().as_str(),
                    &point.persona_id,
                    value,
                    &point.cumulative[value].to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

fn cross_tab_csv(path: &Path, ct: &CrossTab) -> Result<(), ReportError> {
    let col_values: Vec<String> = ct.col_marginals().keys().cloned().collect();
    write_csv(path, |w| {
        let mut header = vec![format!("{}\\{}", ct.row_attribute, ct.col_attribute)];
        header.extend(col_values.iter().cloned());
        w.write_record(&header)?;
        for (row, cols) in &ct.cells {
            let mut record = vec![row.clone()];
            for col in &col_values {
                record.push(cols.get(col).copied().unwrap_or(0).to_string());
            }
            w.write_record(&record)?;
        }
        Ok(())
    })
}

fn goal_table_csv(path: &Path, table: &GoalTable) -> Result<(), ReportError> {
    write_csv(path, |w| {
        w.write_record(["value", "count"])?;
        for (value, count) in &table.rows {
            w.write_record([value.as_str(), &count.to_string()])?;
        }
        Ok(())
    })
}

fn diversity_csv(path: &Path, scores: &[DiversityScore]) -> Result<(), ReportError> {
    write_csv(path, |w| {
        w.write_record([
            "attribute",
            "entropy_bits",
            "normalized_entropy",
            "chi_square_uniform",
            "chi_square_reference",
        ])?;
        for s in scores {
            w.write_record([
                s.attribute.as_str(),
                &s.entropy_bits.to_string(),
                &s.normalized_entropy.to_string(),
                &s.chi_square_uniform.to_string(),
                &s.chi_square_reference
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

fn goal_table_file_name(table: &GoalTable) -> String {
    format!(
        "goal_outcomes_{}_{}.csv",
        table.facet.attribute(),
        if table.achieved { "achieved" } else { "missed" }
    )
}

/// Write the full bundle into `dir` (created if missing) and return the
/// written paths in a stable order.
pub fn write_report(
    dir: &Path,
    personas: &[Persona],
    report: &AnalysisReport,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    for d in &report.distributions {
        let path = dir.join(format!("distribution_{}.csv", d.attribute));
        distribution_csv(&path, d)?;
        let points = distribution_over_time(personas, &d.attribute)?;
        let ot_path = dir.join(format!("distribution_over_time_{}.csv", d.attribute));
        over_time_csv(&ot_path, &points)?;
        written.push(path);
        written.push(ot_path);
    }

    for ct in &report.cross_tabs {
        let path = dir.join(format!(
            "cross_tab_{}_by_{}.csv",
            ct.row_attribute, ct.col_attribute
        ));
        cross_tab_csv(&path, ct)?;
        written.push(path);
    }

    for table in &report.goal_tables {
        let path = dir.join(goal_table_file_name(table));
        goal_table_csv(&path, table)?;
        written.push(path);
    }

    let diversity_path = dir.join("diversity.csv");
    diversity_csv(&diversity_path, &report.diversity)?;
    written.push(diversity_path);

    let summary_path = dir.join("summary.json");
    let mut summary = serde_json::to_vec_pretty(report).expect("report serializes");
    summary.push(b'\n');
    write_atomic(&summary_path, &summary)?;
    written.push(summary_path);

    written.sort();
    Ok(written)
}

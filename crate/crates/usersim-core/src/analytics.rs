//! Descriptive statistics over persona batches and simulated sessions:
//! attribute distributions and cross-tabulations, entropy and chi-square
//! diversity scores, session success metrics, and goal-outcome tables.
//!
//! Reported percentages and averages are rounded half-up to two decimal
//! places; raw scores (entropy, chi-square) are left unrounded.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::DialogueSession;
use crate::persona::{attribute_values, Persona};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("the distribution has no observations")]
    EmptyDistribution,
    #[error("invalid expected distribution: {0}")]
    InvalidExpected(String),
    #[error("no expected probability for observed category '{0}'")]
    MissingExpectedCategory(String),
    #[error("session {session_id} references unknown persona '{persona_id}'")]
    OrphanSession {
        session_id: String,
        persona_id: String,
    },
    #[error("empty input: {0}")]
    EmptyInput(String),
}

/// Value counts of one attribute over a set of personas. `total` is the
/// number of personas observed; for a multi-valued attribute the counts
/// may sum to more than `total` (each persona contributes each of its
/// distinct values once).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub attribute: String,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl Distribution {
    /// Value/count pairs sorted by descending count, ties broken by
    /// lexicographic value order.
    pub fn ranked(&self) -> Vec<(String, u64)> {
        rank_desc(&self.counts)
    }
}

fn rank_desc(counts: &BTreeMap<String, u64>) -> Vec<(String, u64)> {
    let mut pairs: Vec<(String, u64)> = counts.iter().map(|(v, c)| (v.clone(), *c)).collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pairs
}

/// Distinct values of `attribute` for one persona, or an error for an
/// unknown attribute name.
fn distinct_values(p: &Persona, attribute: &str) -> Result<BTreeSet<String>, AnalyticsError> {
    attribute_values(p, attribute)
        .map(|values| values.into_iter().collect())
        .ok_or_else(|| AnalyticsError::UnknownAttribute(attribute.to_string()))
}

/// Count attribute values across personas. Multi-valued attributes
/// count each distinct value once per persona.
pub fn attribute_distribution(
    personas: &[Persona],
    attribute: &str,
) -> Result<Distribution, AnalyticsError> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for p in personas {
        for value in distinct_values(p, attribute)? {
            *counts.entry(value).or_insert(0) += 1;
        }
    }
    Ok(Distribution {
        attribute: attribute.to_string(),
        counts,
        total: personas.len() as u64,
    })
}

/// One persona's contribution to an attribute, plus the cumulative
/// counts after folding it in. `index` is 1-based generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub index: usize,
    pub persona_id: String,
    pub values: Vec<String>,
    pub cumulative: BTreeMap<String, u64>,
}

/// The running distribution of `attribute` in generation order: one
/// point per persona with the counts up to and including it. The last
/// point's counts equal [`attribute_distribution`] over the whole set.
pub fn distribution_over_time(
    personas: &[Persona],
    attribute: &str,
) -> Result<Vec<TimePoint>, AnalyticsError> {
    let mut cumulative: BTreeMap<String, u64> = BTreeMap::new();
    let mut points = Vec::with_capacity(personas.len());
    for (i, p) in personas.iter().enumerate() {
        let values = distinct_values(p, attribute)?;
        for value in &values {
            *cumulative.entry(value.clone()).or_insert(0) += 1;
        }
        points.push(TimePoint {
            index: i + 1,
            persona_id: p.id.clone(),
            values: values.into_iter().collect(),
            cumulative: cumulative.clone(),
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCell {
    pub row: String,
    pub col: String,
    pub count: u64,
}

/// A contingency table of two persona attributes. Each persona
/// contributes one observation per (row value, col value) combination
/// of its distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTab {
    pub row_attribute: String,
    pub col_attribute: String,
    /// row value -> col value -> count
    pub cells: BTreeMap<String, BTreeMap<String, u64>>,
    /// The heaviest cells, by descending count with ties broken by row
    /// then column value.
    pub top: Vec<CrossCell>,
    pub total_pairs: u64,
}

impl CrossTab {
    /// Counts summed over columns. For a single-valued column attribute
    /// these reproduce the row attribute's distribution.
    pub fn row_marginals(&self) -> BTreeMap<String, u64> {
        self.cells
            .iter()
            .map(|(row, cols)| (row.clone(), cols.values().sum()))
            .collect()
    }

    pub fn col_marginals(&self) -> BTreeMap<String, u64> {
        let mut out: BTreeMap<String, u64> = BTreeMap::new();
        for cols in self.cells.values() {
            for (col, count) in cols {
                *out.entry(col.clone()).or_insert(0) += count;
            }
        }
        out
    }
}

/// Cross-tabulate two attributes, keeping the `top_n` heaviest cells in
/// the `top` view (all cells when `top_n` covers them).
pub fn cross_tab(
    personas: &[Persona],
    row_attribute: &str,
    col_attribute: &str,
    top_n: usize,
) -> Result<CrossTab, AnalyticsError> {
    let mut cells: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut total_pairs = 0u64;
    for p in personas {
        let rows = distinct_values(p, row_attribute)?;
        let cols = distinct_values(p, col_attribute)?;
        for row in &rows {
            let entry = cells.entry(row.clone()).or_default();
            for col in &cols {
                *entry.entry(col.clone()).or_insert(0) += 1;
                total_pairs += 1;
            }
        }
    }
    let mut flat: Vec<CrossCell> = cells
        .iter()
        .flat_map(|(row, cols)| {
            cols.iter().map(|(col, count)| CrossCell {
                row: row.clone(),
                col: col.clone(),
                count: *count,
            })
        })
        .collect();
    flat.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.row.cmp(&b.row))
            .then_with(|| a.col.cmp(&b.col))
    });
    flat.truncate(top_n);
    Ok(CrossTab {
        row_attribute: row_attribute.to_string(),
        col_attribute: col_attribute.to_string(),
        cells,
        top: flat,
        total_pairs,
    })
}

/// Diversity of one attribute distribution: Shannon entropy in bits,
/// entropy normalized by the maximum for the observed number of
/// categories (0 for a single category), chi-square against the uniform
/// distribution, and optionally chi-square against a reference
/// distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityScore {
    pub attribute: String,
    pub entropy_bits: f64,
    pub normalized_entropy: f64,
    pub chi_square_uniform: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_square_reference: Option<f64>,
}

fn nonzero_counts(d: &Distribution) -> Result<BTreeMap<&str, u64>, AnalyticsError> {
    let counts: BTreeMap<&str, u64> = d
        .counts
        .iter()
        .filter(|(_, c)| **c > 0)
        .map(|(v, c)| (v.as_str(), *c))
        .collect();
    if counts.is_empty() {
        return Err(AnalyticsError::EmptyDistribution);
    }
    Ok(counts)
}

/// Score a distribution's diversity. Errors on a distribution with no
/// observations.
pub fn shannon_entropy(d: &Distribution) -> Result<DiversityScore, AnalyticsError> {
    let counts = nonzero_counts(d)?;
    let total: u64 = counts.values().sum();
    let total_f = total as f64;
    let entropy_bits: f64 = counts
        .values()
        .map(|c| {
            let p = *c as f64 / total_f;
            -p * p.log2()
        })
        .sum();
    let k = counts.len();
    let normalized_entropy = if k <= 1 {
        0.0
    } else {
        entropy_bits / (k as f64).log2()
    };
    Ok(DiversityScore {
        attribute: d.attribute.clone(),
        entropy_bits,
        normalized_entropy,
        chi_square_uniform: chi_square_uniform(d)?,
        chi_square_reference: None,
    })
}

/// [`shannon_entropy`] plus chi-square against a reference
/// distribution of expected probabilities.
pub fn shannon_entropy_with_reference(
    d: &Distribution,
    expected: &BTreeMap<String, f64>,
) -> Result<DiversityScore, AnalyticsError> {
    let mut score = shannon_entropy(d)?;
    score.chi_square_reference = Some(chi_square(d, expected)?);
    Ok(score)
}

/// Pearson's chi-square statistic of the observed counts against
/// expected probabilities: sum of (observed - expected*total)^2 /
/// (expected*total) over the expected categories. The probabilities
/// must sum to 1 (within 1e-9) and every observed category needs a
/// positive expected probability; expected categories that were never
/// observed count as zero observations.
pub fn chi_square(
    d: &Distribution,
    expected: &BTreeMap<String, f64>,
) -> Result<f64, AnalyticsError> {
    let counts = nonzero_counts(d)?;
    let prob_sum: f64 = expected.values().sum();
    if (prob_sum - 1.0).abs() > 1e-9 {
        return Err(AnalyticsError::InvalidExpected(format!(
            "probabilities sum to {prob_sum}, not 1"
        )));
    }
    if let Some((value, p)) = expected.iter().find(|(_, p)| **p <= 0.0) {
        return Err(AnalyticsError::InvalidExpected(format!(
            "probability of '{value}' is {p}, must be positive"
        )));
    }
    if let Some(value) = counts.keys().find(|v| !expected.contains_key(**v)) {
        return Err(AnalyticsError::MissingExpectedCategory(value.to_string()));
    }
    let total: u64 = counts.values().sum();
    let total_f = total as f64;
    Ok(expected
        .iter()
        .map(|(value, p)| {
            let observed = counts.get(value.as_str()).copied().unwrap_or(0) as f64;
            let expected_count = p * total_f;
            (observed - expected_count).powi(2) / expected_count
        })
        .sum())
}

/// Chi-square against the uniform distribution over the observed
/// categories.
pub fn chi_square_uniform(d: &Distribution) -> Result<f64, AnalyticsError> {
    let counts = nonzero_counts(d)?;
    let p = 1.0 / counts.len() as f64;
    let expected: BTreeMap<String, f64> = counts.keys().map(|v| (v.to_string(), p)).collect();
    chi_square(d, &expected)
}

/// Round half-up to two decimal places. Only used for the non-negative
/// rates and averages reported here.
fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5).floor() / 100.0
}

/// Campaign-level session metrics. Rates and averages are rounded
/// half-up to two decimals; turn averages cover successful sessions
/// only, word averages cover the user turns of all sessions, grouped by
/// the persona's communication type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub n_sessions: usize,
    pub n_success: usize,
    /// Percentage of sessions with a success outcome.
    pub success_rate: f64,
    pub avg_total_turns_success: f64,
    pub avg_user_turns_success: f64,
    /// communication type -> mean words per user turn (whitespace
    /// tokenization).
    pub avg_user_words_by_comm_type: BTreeMap<String, f64>,
}

fn persona_index(personas: &[Persona]) -> BTreeMap<&str, &Persona> {
    personas.iter().map(|p| (p.id.as_str(), p)).collect()
}

fn lookup<'a>(
    index: &BTreeMap<&str, &'a Persona>,
    session: &DialogueSession,
) -> Result<&'a Persona, AnalyticsError> {
    index
        .get(session.persona_id.as_str())
        .copied()
        .ok_or_else(|| AnalyticsError::OrphanSession {
            session_id: session.session_id.clone(),
            persona_id: session.persona_id.clone(),
        })
}

pub fn session_metrics(
    sessions: &[DialogueSession],
    personas: &[Persona],
) -> Result<SessionMetrics, AnalyticsError> {
    if sessions.is_empty() {
        return Err(AnalyticsError::EmptyInput("no sessions".to_string()));
    }
    let index = persona_index(personas);

    let mut n_success = 0usize;
    let mut success_total_turns = 0usize;
    let mut success_user_turns = 0usize;
    let mut words_by_type: BTreeMap<String, (u64, u64)> = BTreeMap::new();

    for session in sessions {
        let persona = lookup(&index, session)?;
        if session.outcome.is_success() {
            n_success += 1;
            success_total_turns += session.total_turn_count();
            success_user_turns += session.user_turn_count();
        }
        let (words, turns) = words_by_type
            .entry(persona.communication_type.clone())
            .or_insert((0, 0));
        for utterance in session.user_utterances() {
            *words += utterance.split_whitespace().count() as u64;
            *turns += 1;
        }
    }

    let avg = |sum: usize, n: usize| {
        if n == 0 {
            0.0
        } else {
            round2(sum as f64 / n as f64)
        }
    };
    Ok(SessionMetrics {
        n_sessions: sessions.len(),
        n_success,
        success_rate: round2(n_success as f64 / sessions.len() as f64 * 100.0),
        avg_total_turns_success: avg(success_total_turns, n_success),
        avg_user_turns_success: avg(success_user_turns, n_success),
        avg_user_words_by_comm_type: words_by_type
            .into_iter()
            .map(|(comm, (words, turns))| {
                let mean = if turns == 0 {
                    0.0
                } else {
                    round2(words as f64 / turns as f64)
                };
                (comm, mean)
            })
            .collect(),
    })
}

/// Persona facets a goal-outcome table can aggregate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    SecondaryGoal,
    GeneralInterest,
}

impl Facet {
    pub fn attribute(self) -> &'static str {
        match self {
            Facet::SecondaryGoal => "secondary_goals",
            Facet::GeneralInterest => "general_interests",
        }
    }
}

impl std::str::FromStr for Facet {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "secondary_goal" | "secondary_goals" => Ok(Facet::SecondaryGoal),
            "general_interest" | "general_interests" => Ok(Facet::GeneralInterest),
            other => Err(AnalyticsError::UnknownAttribute(other.to_string())),
        }
    }
}

/// Count facet values of the personas behind sessions with (or without)
/// a success outcome: each session contributes each of its persona's
/// distinct facet values once. Returns the `top_n` (value, count) pairs
/// by descending count, ties broken lexicographically.
pub fn goal_outcome_table(
    sessions: &[DialogueSession],
    personas: &[Persona],
    facet: Facet,
    achieved: bool,
    top_n: usize,
) -> Result<Vec<(String, u64)>, AnalyticsError> {
    if sessions.is_empty() {
        return Err(AnalyticsError::EmptyInput("no sessions".to_string()));
    }
    let index = persona_index(personas);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for session in sessions {
        let persona = lookup(&index, session)?;
        if session.outcome.is_success() != achieved {
            continue;
        }
        for value in distinct_values(persona, facet.attribute())? {
            *counts.entry(value).or_insert(0) += 1;
        }
    }
    let mut ranked = rank_desc(&counts);
    ranked.truncate(top_n);
    Ok(ranked)
}

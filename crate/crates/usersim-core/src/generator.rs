//! Diversity-steered persona generation.
//!
//! Generation is strictly sequential: the prompt for user k embeds the
//! attribute value counts of users 1..k-1, so the model sees the evolving
//! population and can balance it. Parallel generation is intentionally
//! unsupported; distinct batches (one per model label) may run
//! concurrently with independent statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::gateway::{
    with_retry, ChatBackend, ChatMessage, ChatRequest, GatewayError, RetryPolicy,
    TEMPERATURE_CREATIVE,
};
use crate::persona::{parse_persona, snake_case, Persona, PersonaError, PersonaTemplate};

/// Single-valued attributes whose value counts are fed back into the
/// generation prompt.
pub const TRACKED_SINGLE_VALUED: [&str; 12] = [
    "age",
    "gender",
    "region",
    "nationality",
    "desired_degree",
    "language_preference",
    "communication_type",
    "openness",
    "conscientiousness",
    "extraversion",
    "agreeableness",
    "neuroticism",
];

/// Multi-valued attributes, counted once per persona per distinct value.
pub const TRACKED_MULTI_VALUED: [&str; 2] = ["general_interests", "secondary_goals"];

/// Running value counts per attribute across all generated personas.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeStatistics {
    /// attribute name -> value -> count
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
    pub total_personas: u64,
    /// persona ids in generation order
    pub order: Vec<String>,
}

impl AttributeStatistics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold one persona into the counts. Counts never decrease; for
    /// every single-valued attribute the value counts sum to
    /// `total_personas` afterwards.
    pub fn update(&mut self, p: &Persona) {
        for (attr, value) in single_valued_attributes(p) {
            *self
                .counts
                .entry(attr.to_string())
                .or_default()
                .entry(value)
                .or_insert(0) += 1;
        }
        for (attr, values) in multi_valued_attributes(p) {
            let entry = self.counts.entry(attr.to_string()).or_default();
            let mut seen = std::collections::BTreeSet::new();
            for value in values {
                let value = snake_case(&value);
                if seen.insert(value.clone()) {
                    *entry.entry(value).or_insert(0) += 1;
                }
            }
        }
        self.order.push(p.id.clone());
        self.total_personas += 1;
    }

    pub fn attribute(&self, name: &str) -> Option<&BTreeMap<String, u64>> {
        self.counts.get(name)
    }

    /// The prompt block: one attribute per paragraph, values sorted by
    /// descending count (ties lexicographic) so the prompt stays stable
    /// as counts grow.
    pub fn prompt_block(&self) -> String {
        if self.total_personas == 0 {
            return "No users generated yet.".to_string();
        }
        let mut lines = vec![format!(
            "Statistics of the {} already generated users (value: count):",
            self.total_personas
        )];
        for (attr, values) in &self.counts {
            lines.push(format!("{attr}:"));
            let mut pairs: Vec<(&String, &u64)> = values.iter().collect();
            pairs.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
            for (value, count) in pairs {
                lines.push(format!("  {value}: {count}"));
            }
        }
        lines.join("\n")
    }
}

fn single_valued_attributes(p: &Persona) -> Vec<(&'static str, String)> {
    let mut out = vec![
        ("age", p.age.to_string()),
        ("gender", p.gender.clone()),
        ("region", p.region.clone()),
        ("nationality", p.nationality.clone()),
        ("desired_degree", p.desired_degree.clone()),
        ("language_preference", p.language_preference.clone()),
        ("communication_type", p.communication_type.clone()),
    ];
    for (dim, value) in p.personality.dimensions() {
        out.push((dim_name(dim), value.to_string()));
    }
    out
}

fn dim_name(dim: &str) -> &'static str {
    match dim {
        "openness" => "openness",
        "conscientiousness" => "conscientiousness",
        "extraversion" => "extraversion",
        "agreeableness" => "agreeableness",
        _ => "neuroticism",
    }
}

fn multi_valued_attributes(p: &Persona) -> Vec<(&'static str, Vec<String>)> {
    vec![
        ("general_interests", p.general_interests.clone()),
        ("secondary_goals", p.user_goals.secondary_goals.clone()),
    ]
}

pub const DEFAULT_GENERATION_SYSTEM_PROMPT: &str = "You create synthetic user profiles for a university study-program advisory chatbot. Generate diverse users, but reflect a real-world distribution of prospective students. Use the statistics of already generated users to steer towards under-represented values. Fill in every field of the user template and reply with a single JSON object only, no commentary.";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub batch_size: u32,
    /// Retries after the first attempt when a completion fails to parse
    /// or validate; the violation list is appended to the retry prompt.
    pub max_parse_retries: u32,
    pub temperature: f64,
    pub system_prompt: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            max_parse_retries: 2,
            temperature: TEMPERATURE_CREATIVE,
            system_prompt: DEFAULT_GENERATION_SYSTEM_PROMPT.to_string(),
        }
    }
}

/// Build the dynamic generation prompt: system prompt, statistics of
/// already generated users, and the template to fill in. Deterministic
/// given its inputs.
pub fn compose_generation_prompt(
    cfg: &GenerationConfig,
    stats: &AttributeStatistics,
    template: &PersonaTemplate,
) -> ChatRequest {
    let template_json = serde_json::to_string_pretty(&template.fill_in_json())
        .expect("template skeleton serializes");
    let user = format!(
        "{}\n\nUser template to fill in:\n{}",
        stats.prompt_block(),
        template_json
    );
    ChatRequest::new(
        vec![
            ChatMessage::system(cfg.system_prompt.clone()),
            ChatMessage::user(user),
        ],
        cfg.temperature,
    )
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("persona generation failed after {attempts} attempt(s): {last}")]
    Failed { attempts: u32, last: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// A batch that died mid-way still surrenders what it produced.
#[derive(Debug, Error)]
#[error("batch aborted after {} persona(s): {failure}", completed.len())]
pub struct BatchAborted {
    pub completed: Vec<Persona>,
    pub stats: AttributeStatistics,
    #[source]
    pub failure: GenerationError,
}

pub struct PersonaGenerator<'a> {
    backend: &'a dyn ChatBackend,
    clock: &'a dyn Clock,
    cfg: GenerationConfig,
    template: PersonaTemplate,
    retry_policy: RetryPolicy,
}

impl<'a> PersonaGenerator<'a> {
    pub fn new(
        backend: &'a dyn ChatBackend,
        clock: &'a dyn Clock,
        cfg: GenerationConfig,
        template: PersonaTemplate,
    ) -> Self {
        Self {
            backend,
            clock,
            cfg,
            template,
            retry_policy: RetryPolicy::default(),
        }
    }

    pub fn retry_policy(mut self, policy: RetryPolicy) -> Self {
        self.retry_policy = policy;
        self
    }

    pub fn template(&self) -> &PersonaTemplate {
        &self.template
    }

    /// Generate one persona and fold it into `stats`.
    ///
    /// Schema violations and malformed JSON are retried up to
    /// `max_parse_retries` times with the violation text appended to the
    /// conversation, then surface as [`GenerationError::Failed`].
    pub fn generate_one(
        &self,
        stats: &mut AttributeStatistics,
    ) -> Result<Persona, GenerationError> {
        let base = compose_generation_prompt(&self.cfg, stats, &self.template);
        let mut request = base;
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let response = with_retry(self.backend, &request, &self.retry_policy)?;
            match parse_persona(&response.content, &self.template) {
                Ok(mut persona) => {
                    if persona.id.is_empty() || stats.order.contains(&persona.id) {
                        persona.id = format!(
                            "{}_{:03}",
                            snake_case(self.backend.label()),
                            stats.total_personas + 1
                        );
                    }
                    persona.created_at = self.clock.now();
                    persona.generator_model = self.backend.label().to_string();
                    stats.update(&persona);
                    return Ok(persona);
                }
                Err(err) => {
                    if attempts > self.cfg.max_parse_retries {
                        return Err(GenerationError::Failed {
                            attempts,
                            last: err.to_string(),
                        });
                    }
                    let feedback = match &err {
                        PersonaError::SchemaViolation(v) => format!(
                            "Your previous reply was rejected: {}. Reply again with a single corrected JSON object only.",
                            v.describe()
                        ),
                        PersonaError::MalformedJson(_) => "Your previous reply contained no parseable JSON object. Reply again with a single JSON object only.".to_string(),
                    };
                    request
                        .messages
                        .push(ChatMessage::assistant(response.content.clone()));
                    request.messages.push(ChatMessage::user(feedback));
                }
            }
        }
    }

    /// Run `generate_one` sequentially `batch_size` times, threading the
    /// statistics through. A mid-batch failure returns the completed
    /// prefix alongside the error.
    pub fn generate_batch(&self) -> Result<BatchOutcome, BatchAborted> {
        let mut stats = AttributeStatistics::new();
        let mut personas = Vec::with_capacity(self.cfg.batch_size as usize);
        for _ in 0..self.cfg.batch_size {
            match self.generate_one(&mut stats) {
                Ok(p) => personas.push(p),
                Err(failure) => {
                    return Err(BatchAborted {
                        completed: personas,
                        stats,
                        failure,
                    })
                }
            }
        }
        Ok(BatchOutcome { personas, stats })
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub personas: Vec<Persona>,
    pub stats: AttributeStatistics,
}

//! Reference implementation of the StudyBot side of a session: a
//! catalog-grounded advisory chatbot for university study programs.
//!
//! Understanding is rule-based (a keyword lexicon plus program-name
//! matching), answers come verbatim from the program catalog, and any
//! failure is rendered as an apology or clarification so the bot never
//! errors mid-session. An optional paraphrase backend can reword the
//! templated answer; when it fails the template text is used as-is.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{Speaker, SystemAdapter, SystemError, SystemReply, Turn};
use crate::gateway::{
    with_retry, ChatBackend, ChatMessage, ChatRequest, GatewayError, RetryPolicy,
};
use crate::jsonl::read_jsonl;

/// The queryable attributes of a program record (every catalog column
/// except the program name), in column order.
pub const ATTRIBUTES: [&str; 16] = [
    "degree_type",
    "program_description",
    "ects_points",
    "admission_requirements",
    "admission_restriction",
    "standard_period_of_study",
    "start_of_program",
    "language_of_instruction",
    "module_contents",
    "acquired_skills",
    "structure_of_the_program",
    "career_prospects",
    "application_deadline",
    "tuition_fees",
    "faculty",
    "program_website",
];

/// Result lists longer than this are narrowed down by degree type
/// instead of being rendered as buttons.
pub const MAX_BUTTON_ROWS: usize = 8;

pub const INTENT_GREETING: &str = "greeting";
pub const INTENT_FALLBACK: &str = "fallback";
pub const INTENT_LIST_PROGRAMS: &str = "list_programs";
pub const INTENT_PROGRAM_INFO: &str = "program_info";
pub const INTENT_INTEREST_SEARCH: &str = "interest_search";

pub const ENTITY_PROGRAM: &str = "program";
pub const ENTITY_DEGREE_TYPE: &str = "degree_type";
pub const ENTITY_KEYWORDS: &str = "keywords";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramRecord {
    pub name: String,
    pub degree_type: String,
    pub program_description: String,
    pub ects_points: String,
    pub admission_requirements: String,
    pub admission_restriction: String,
    pub standard_period_of_study: String,
    pub start_of_program: String,
    pub language_of_instruction: String,
    pub module_contents: String,
    pub acquired_skills: String,
    pub structure_of_the_program: String,
    pub career_prospects: String,
    pub application_deadline: String,
    pub tuition_fees: String,
    pub faculty: String,
    pub program_website: String,
}

impl ProgramRecord {
    /// The value of a queryable attribute, or `None` for an unknown
    /// attribute name.
    pub fn attribute(&self, attribute: &str) -> Option<&str> {
        let value = match attribute {
            "degree_type" => &self.degree_type,
            "program_description" => &self.program_description,
            "ects_points" => &self.ects_points,
            "admission_requirements" => &self.admission_requirements,
            "admission_restriction" => &self.admission_restriction,
            "standard_period_of_study" => &self.standard_period_of_study,
            "start_of_program" => &self.start_of_program,
            "language_of_instruction" => &self.language_of_instruction,
            "module_contents" => &self.module_contents,
            "acquired_skills" => &self.acquired_skills,
            "structure_of_the_program" => &self.structure_of_the_program,
            "career_prospects" => &self.career_prospects,
            "application_deadline" => &self.application_deadline,
            "tuition_fees" => &self.tuition_fees,
            "faculty" => &self.faculty,
            "program_website" => &self.program_website,
            _ => return None,
        };
        Some(value)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("failed to read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error("catalog record {index}: {detail}")]
    MalformedRecord { index: usize, detail: String },
    #[error("catalog contains no programs")]
    EmptyCatalog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramCatalog {
    programs: Vec<ProgramRecord>,
}

impl ProgramCatalog {
    /// Validate and wrap a set of records: the catalog must be
    /// non-empty, every program needs a name, and names must be unique
    /// (case-insensitively).
    pub fn new(programs: Vec<ProgramRecord>) -> Result<Self, CatalogError> {
        if programs.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (i, p) in programs.iter().enumerate() {
            let index = i + 1;
            if p.name.trim().is_empty() {
                return Err(CatalogError::MalformedRecord {
                    index,
                    detail: "missing program name".to_string(),
                });
            }
            if !seen.insert(p.name.to_lowercase()) {
                return Err(CatalogError::MalformedRecord {
                    index,
                    detail: format!("duplicate program name '{}'", p.name),
                });
            }
        }
        Ok(Self { programs })
    }

    pub fn from_csv_str(content: &str) -> Result<Self, CatalogError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(content.as_bytes());
        let mut programs = Vec::new();
        for (i, record) in reader.deserialize::<ProgramRecord>().enumerate() {
            let record = record.map_err(|e| CatalogError::MalformedRecord {
                index: i + 1,
                detail: e.to_string(),
            })?;
            programs.push(record);
        }
        Self::new(programs)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, CatalogError> {
        let content = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&content)
    }

    pub fn from_jsonl_path(path: &Path) -> Result<Self, CatalogError> {
        let programs: Vec<ProgramRecord> = read_jsonl(path)?;
        Self::new(programs)
    }

    /// Load a catalog by file extension: `.jsonl` as JSON lines,
    /// anything else as CSV.
    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        if path.extension().is_some_and(|e| e == "jsonl") {
            Self::from_jsonl_path(path)
        } else {
            Self::from_csv_path(path)
        }
    }

    /// The catalog bundled with the crate, used by tests and as a
    /// default for local runs.
    pub fn bundled() -> Self {
        Self::from_csv_str(include_str!("../fixtures/catalog/programs.csv"))
            .expect("bundled catalog is valid")
    }

    pub fn programs(&self) -> &[ProgramRecord] {
        &self.programs
    }

    /// Case-insensitive lookup by exact program name.
    pub fn get(&self, name: &str) -> Option<&ProgramRecord> {
        self.programs
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name.trim()))
    }

    /// Distinct degree types in first-seen order.
    pub fn degree_types(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.programs
            .iter()
            .filter(|p| seen.insert(p.degree_type.clone()))
            .map(|p| p.degree_type.clone())
            .collect()
    }

    pub fn attribute_names(&self) -> &'static [&'static str] {
        &ATTRIBUTES
    }
}

/// A recognized user act: an intent from the fixed set (the sixteen
/// attribute names plus greeting, list_programs, program_info,
/// interest_search and fallback), extracted entities, and a heuristic
/// confidence derived from how much of the utterance the matches cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueAct {
    pub intent: String,
    pub entities: BTreeMap<String, String>,
    pub confidence: f64,
}

impl DialogueAct {
    fn new(intent: &str, entities: BTreeMap<String, String>, confidence: f64) -> Self {
        Self {
            intent: intent.to_string(),
            entities,
            confidence: confidence.clamp(0.0, 1.0),
        }
    }

    pub fn fallback() -> Self {
        Self::new(INTENT_FALLBACK, BTreeMap::new(), 0.0)
    }
}

/// Per-session dialogue state: the last recognized act, the program the
/// conversation is currently about (always a catalog program name), and
/// accumulated slots such as a degree-type filter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BotState {
    pub last_act: Option<DialogueAct>,
    pub active_program: Option<String>,
    pub slots: BTreeMap<String, String>,
}

/// Keyword lexicon mapping surface phrases to attribute intents. At
/// recognition time the longest matching keyword wins; equally long
/// matches tie-break to the lexicographically smaller attribute name.
/// Matching is by substring, so keywords are chosen to avoid phrases
/// that embed into common longer words.
const ATTRIBUTE_KEYWORDS: [(&str, &str); 58] = [
    ("degree type", "degree_type"),
    ("kind of degree", "degree_type"),
    ("which degree", "degree_type"),
    ("bachelor or master", "degree_type"),
    ("what is it about", "program_description"),
    ("describe", "program_description"),
    ("description", "program_description"),
    ("tell me more about", "program_description"),
    ("ects", "ects_points"),
    ("credit points", "ects_points"),
    ("credits", "ects_points"),
    ("admission requirements", "admission_requirements"),
    ("entry requirements", "admission_requirements"),
    ("requirements", "admission_requirements"),
    ("prerequisites", "admission_requirements"),
    ("qualify", "admission_requirements"),
    ("admission restriction", "admission_restriction"),
    ("admission restricted", "admission_restriction"),
    ("restricted admission", "admission_restriction"),
    ("numerus clausus", "admission_restriction"),
    ("restriction", "admission_restriction"),
    ("standard period", "standard_period_of_study"),
    ("how long", "standard_period_of_study"),
    ("duration", "standard_period_of_study"),
    ("how many semesters", "standard_period_of_study"),
    ("semesters does", "standard_period_of_study"),
    ("start of the program", "start_of_program"),
    ("when does it start", "start_of_program"),
    ("when can i start", "start_of_program"),
    ("winter or summer", "start_of_program"),
    ("start in the summer", "start_of_program"),
    ("language of instruction", "language_of_instruction"),
    ("taught in", "language_of_instruction"),
    ("which language", "language_of_instruction"),
    ("what language", "language_of_instruction"),
    ("module contents", "module_contents"),
    ("modules", "module_contents"),
    ("courses", "module_contents"),
    ("subjects", "module_contents"),
    ("curriculum", "module_contents"),
    ("skills", "acquired_skills"),
    ("will i learn", "acquired_skills"),
    ("competences", "acquired_skills"),
    ("structure of the program", "structure_of_the_program"),
    ("structured", "structure_of_the_program"),
    ("structure", "structure_of_the_program"),
    ("career", "career_prospects"),
    ("jobs", "career_prospects"),
    ("job prospects", "career_prospects"),
    ("after graduation", "career_prospects"),
    ("application deadline", "application_deadline"),
    ("deadline", "application_deadline"),
    ("when can i apply", "application_deadline"),
    ("tuition", "tuition_fees"),
    ("fees", "tuition_fees"),
    ("faculty", "faculty"),
    ("website", "program_website"),
    ("link", "program_website"),
];

/// Phrases that signal a program-listing request.
const SEARCH_PHRASES: [&str; 15] = [
    "which program",
    "what program",
    "which study program",
    "what study program",
    "which bachelor",
    "which master",
    "what bachelor",
    "what master",
    "programs are there",
    "programs can i",
    "programs do you",
    "list of programs",
    "all programs",
    "show me programs",
    "available programs",
];

/// Single words that count as a greeting; matched against whole words,
/// not substrings, so "nothing" does not read as "hi".
const GREETING_WORDS: [&str; 5] = ["hello", "hi", "hey", "greetings", "morning"];

/// Words that signal the user is talking about programs of study at
/// all, used to gate interest-based search.
const INTEREST_TRIGGERS: [&str; 4] = ["program", "study", "studies", "course"];

/// Function words excluded from interest keywords.
const STOPWORDS: [&str; 41] = [
    "about",
    "and",
    "anything",
    "are",
    "bachelor",
    "can",
    "could",
    "course",
    "courses",
    "degree",
    "does",
    "for",
    "have",
    "interested",
    "know",
    "like",
    "looking",
    "master",
    "offer",
    "offers",
    "please",
    "program",
    "programme",
    "programmes",
    "programs",
    "related",
    "some",
    "something",
    "studies",
    "study",
    "that",
    "the",
    "there",
    "university",
    "want",
    "what",
    "which",
    "with",
    "would",
    "you",
    "your",
];

fn match_attribute(lower: &str) -> Option<(&'static str, usize)> {
    let mut best: Option<(&'static str, usize)> = None;
    for (keyword, attribute) in ATTRIBUTE_KEYWORDS {
        if !lower.contains(keyword) {
            continue;
        }
        let better = match best {
            None => true,
            Some((best_attr, best_len)) => {
                keyword.len() > best_len || (keyword.len() == best_len && attribute < best_attr)
            }
        };
        if better {
            best = Some((attribute, keyword.len()));
        }
    }
    best
}

fn match_search(lower: &str) -> Option<(Option<String>, usize)> {
    let phrase = SEARCH_PHRASES.iter().find(|p| lower.contains(*p))?;
    let filter = if lower.contains("bachelor") {
        Some("Bachelor".to_string())
    } else if lower.contains("master") {
        Some("Master".to_string())
    } else {
        None
    };
    Some((filter, phrase.len()))
}

fn find_program_mention(catalog: &ProgramCatalog, lower: &str) -> Option<(String, usize)> {
    let mut best: Option<(String, usize)> = None;
    for p in catalog.programs() {
        let name_lower = p.name.to_lowercase();
        if !lower.contains(&name_lower) {
            continue;
        }
        let better = match &best {
            None => true,
            Some((best_name, best_len)) => {
                name_lower.len() > *best_len
                    || (name_lower.len() == *best_len && p.name < *best_name)
            }
        };
        if better {
            best = Some((p.name.clone(), name_lower.len()));
        }
    }
    best
}

fn words_of(lower: &str) -> impl Iterator<Item = &str> {
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
}

fn interest_keywords(lower: &str) -> Vec<String> {
    let words: BTreeSet<String> = words_of(lower)
        .filter(|w| w.len() >= 3 && !STOPWORDS.contains(w))
        .map(str::to_string)
        .collect();
    words.into_iter().collect()
}

fn coverage(matched: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        (matched as f64 / total as f64).clamp(0.0, 1.0)
    }
}

/// Map an utterance to a dialogue act. Attribute questions rank above
/// listing requests, which rank above direct program mentions and
/// interest-based search; a bare greeting is recognized last, and
/// anything else is the fallback act with zero confidence. A question
/// like "how many ECTS points does it have?" resolves "it" through the
/// session's active program.
pub fn recognize(utterance: &str, catalog: &ProgramCatalog, state: &BotState) -> DialogueAct {
    let lower = utterance.to_lowercase();
    let total = lower.len();
    let mention = find_program_mention(catalog, &lower);

    if let Some((attribute, keyword_len)) = match_attribute(&lower) {
        let mut entities = BTreeMap::new();
        let mut matched = keyword_len;
        if let Some((name, name_len)) = &mention {
            entities.insert(ENTITY_PROGRAM.to_string(), name.clone());
            matched += name_len;
        } else if let Some(active) = &state.active_program {
            entities.insert(ENTITY_PROGRAM.to_string(), active.clone());
        }
        return DialogueAct::new(attribute, entities, coverage(matched, total));
    }

    if let Some((filter, phrase_len)) = match_search(&lower) {
        let mut entities = BTreeMap::new();
        let mut matched = phrase_len;
        if let Some(degree) = filter {
            matched += degree.len();
            entities.insert(ENTITY_DEGREE_TYPE.to_string(), degree);
        }
        return DialogueAct::new(INTENT_LIST_PROGRAMS, entities, coverage(matched, total));
    }

    if let Some((name, name_len)) = mention {
        let entities = BTreeMap::from([(ENTITY_PROGRAM.to_string(), name)]);
        return DialogueAct::new(INTENT_PROGRAM_INFO, entities, coverage(name_len, total));
    }

    if INTEREST_TRIGGERS.iter().any(|t| lower.contains(t)) {
        let keywords = interest_keywords(&lower);
        if !keywords.is_empty() {
            let matched: usize = keywords.iter().map(|k| k.len()).sum();
            let entities = BTreeMap::from([(ENTITY_KEYWORDS.to_string(), keywords.join(" "))]);
            return DialogueAct::new(INTENT_INTEREST_SEARCH, entities, coverage(matched, total));
        }
    }

    if let Some(word) = words_of(&lower).find(|w| GREETING_WORDS.contains(w)) {
        return DialogueAct::new(
            INTENT_GREETING,
            BTreeMap::new(),
            coverage(word.len(), total),
        );
    }

    DialogueAct::fallback()
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    AttributeValue {
        program: String,
        attribute: String,
        value: String,
    },
    /// Program names in rank order plus the degree filter that produced
    /// them, if any.
    ProgramList {
        programs: Vec<String>,
        filter: Option<String>,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("the act does not map to a catalog query")]
    NoMatch,
    #[error("unknown program '{0}'")]
    UnknownProgram(String),
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("no program in scope for attribute '{attribute}'")]
    MissingProgram { attribute: String },
}

/// Rank programs by how many of the keywords occur in the program name
/// or description, descending; ties break on program name. Programs
/// with no overlap are dropped.
fn rank_by_interest(catalog: &ProgramCatalog, keywords: &[&str]) -> Vec<String> {
    let mut scored: Vec<(usize, &ProgramRecord)> = catalog
        .programs()
        .iter()
        .map(|p| {
            let haystack = format!("{} {}", p.name, p.program_description).to_lowercase();
            let score = keywords.iter().filter(|k| haystack.contains(**k)).count();
            (score, p)
        })
        .filter(|(score, _)| *score > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.name.cmp(&b.1.name)));
    scored.into_iter().map(|(_, p)| p.name.clone()).collect()
}

/// Execute a recognized act against the catalog. Attribute queries
/// resolve their program from the act's entities or, failing that,
/// from the state's active program, and update the active program on
/// success.
pub fn execute_query(
    catalog: &ProgramCatalog,
    act: &DialogueAct,
    state: &mut BotState,
) -> Result<QueryResult, QueryError> {
    match act.intent.as_str() {
        INTENT_GREETING | INTENT_FALLBACK => Err(QueryError::NoMatch),
        INTENT_LIST_PROGRAMS => {
            let filter = act.entities.get(ENTITY_DEGREE_TYPE).cloned();
            let programs: Vec<String> = catalog
                .programs()
                .iter()
                .filter(|p| {
                    filter
                        .as_ref()
                        .is_none_or(|f| p.degree_type.eq_ignore_ascii_case(f))
                })
                .map(|p| p.name.clone())
                .collect();
            if let Some(f) = &filter {
                state
                    .slots
                    .insert(ENTITY_DEGREE_TYPE.to_string(), f.clone());
            }
            Ok(QueryResult::ProgramList { programs, filter })
        }
        INTENT_INTEREST_SEARCH => {
            let keywords_raw = act
                .entities
                .get(ENTITY_KEYWORDS)
                .cloned()
                .unwrap_or_default();
            let keywords: Vec<&str> = keywords_raw.split_whitespace().collect();
            if keywords.is_empty() {
                return Err(QueryError::NoMatch);
            }
            state
                .slots
                .insert(ENTITY_KEYWORDS.to_string(), keywords_raw.clone());
            Ok(QueryResult::ProgramList {
                programs: rank_by_interest(catalog, &keywords),
                filter: None,
            })
        }
        INTENT_PROGRAM_INFO => {
            let name = act
                .entities
                .get(ENTITY_PROGRAM)
                .ok_or(QueryError::NoMatch)?;
            let record = catalog
                .get(name)
                .ok_or_else(|| QueryError::UnknownProgram(name.clone()))?;
            state.active_program = Some(record.name.clone());
            Ok(QueryResult::AttributeValue {
                program: record.name.clone(),
                attribute: "program_description".to_string(),
                value: record.program_description.clone(),
            })
        }
        attribute if ATTRIBUTES.contains(&attribute) => {
            let name = act
                .entities
                .get(ENTITY_PROGRAM)
                .cloned()
                .or_else(|| state.active_program.clone())
                .ok_or_else(|| QueryError::MissingProgram {
                    attribute: attribute.to_string(),
                })?;
            let record = catalog
                .get(&name)
                .ok_or_else(|| QueryError::UnknownProgram(name.clone()))?;
            let value = record
                .attribute(attribute)
                .ok_or_else(|| QueryError::UnknownAttribute(attribute.to_string()))?;
            state.active_program = Some(record.name.clone());
            Ok(QueryResult::AttributeValue {
                program: record.name.clone(),
                attribute: attribute.to_string(),
                value: value.to_string(),
            })
        }
        other => Err(QueryError::UnknownAttribute(other.to_string())),
    }
}

pub const GREETING_REPLY: &str = "Hello! I am StudyBot. I can tell you about our study programs: their contents, admission requirements, deadlines, fees and more. What would you like to know?";

pub const FALLBACK_REPLY: &str = "Sorry, I did not understand that. You can ask about our study programs, for example 'Which Master programs are there?' or 'How many ECTS points does Computer Science have?'.";

pub const NO_MATCH_REPLY: &str = "I could not find any study programs matching your request. You can ask for all Bachelor or Master programs to see what we offer.";

fn attribute_label(attribute: &str) -> String {
    if attribute == "ects_points" {
        return "ECTS points".to_string();
    }
    let spaced = attribute.replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => spaced,
    }
}

/// Render a query result into the deterministic templated reply. Every
/// factual value is copied verbatim from the catalog.
pub fn render_template(catalog: &ProgramCatalog, result: &QueryResult) -> SystemReply {
    match result {
        QueryResult::AttributeValue {
            program,
            attribute,
            value,
        } => {
            if attribute == "program_description" {
                SystemReply::text(format!("{program}: {value}"))
            } else {
                SystemReply::text(format!(
                    "{} of {program}: {value}",
                    attribute_label(attribute)
                ))
            }
        }
        QueryResult::ProgramList { programs, filter } => match programs.len() {
            0 => SystemReply::text(NO_MATCH_REPLY),
            1 => {
                let name = &programs[0];
                let description = catalog
                    .get(name)
                    .map(|p| p.program_description.clone())
                    .unwrap_or_default();
                SystemReply::text(format!(
                    "There is one matching program. {name}: {description}"
                ))
            }
            n if n <= MAX_BUTTON_ROWS => {
                let scope = match filter {
                    Some(f) => format!("{n} {f} programs"),
                    None => format!("{n} matching programs"),
                };
                SystemReply::with_buttons(
                    format!("I found {scope}. Pick one to learn more:"),
                    programs.clone(),
                )
            }
            n => SystemReply::with_buttons(
                format!(
                    "There are {n} matching programs. Which degree type are you interested in?"
                ),
                catalog.degree_types(),
            ),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Template,
    Llm,
}

pub const PARAPHRASE_TEMPERATURE: f64 = 0.3;

pub const PARAPHRASE_SYSTEM_PROMPT: &str = "You are StudyBot, a friendly university study-program advisor. Rephrase the drafted answer below as one natural chat message. Keep every factual value (numbers, dates, names, URLs) exactly as written. Do not add facts. Reply with the message only.";

fn paraphrase_request(intent: &str, drafted: &str) -> ChatRequest {
    ChatRequest::new(
        vec![
            ChatMessage::system(PARAPHRASE_SYSTEM_PROMPT),
            ChatMessage::user(format!("User intent: {intent}\nDrafted answer: {drafted}")),
        ],
        PARAPHRASE_TEMPERATURE,
    )
}

/// Render a result in the requested mode. Template mode is
/// deterministic; LLM mode asks `backend` to reword the templated text
/// (keeping buttons and factual values) and propagates gateway errors
/// to the caller.
pub fn render_response(
    catalog: &ProgramCatalog,
    act: &DialogueAct,
    result: &QueryResult,
    mode: RenderMode,
    backend: Option<&dyn ChatBackend>,
    retry_policy: &RetryPolicy,
) -> Result<SystemReply, GatewayError> {
    let templated = render_template(catalog, result);
    match mode {
        RenderMode::Template => Ok(templated),
        RenderMode::Llm => {
            let backend = backend.expect("llm render mode requires a backend");
            let request = paraphrase_request(&act.intent, &templated.utterance);
            let response = with_retry(backend, &request, retry_policy)?;
            Ok(SystemReply {
                utterance: response.content.trim().to_string(),
                buttons: templated.buttons,
            })
        }
    }
}

/// The bot itself: a catalog plus an optional paraphrase backend. With
/// no paraphraser every reply is the deterministic template.
pub struct StudyBot {
    catalog: ProgramCatalog,
    paraphraser: Option<Box<dyn ChatBackend>>,
    retry_policy: RetryPolicy,
}

impl StudyBot {
    pub fn new(catalog: ProgramCatalog) -> Self {
        Self {
            catalog,
            paraphraser: None,
            retry_policy: RetryPolicy::default(),
        }
    }

    pub fn with_paraphraser(mut self, backend: Box<dyn ChatBackend>) -> Self {
        self.paraphraser = Some(backend);
        self
    }

    pub fn with_retry_policy(mut self, retry_policy: RetryPolicy) -> Self {
        self.retry_policy = retry_policy;
        self
    }

    pub fn catalog(&self) -> &ProgramCatalog {
        &self.catalog
    }

    /// Recognize, query and template-render one user turn, updating
    /// `state`. Infallible: recognition misses and query errors render
    /// as clarification replies. A button selection is resolved
    /// directly (program name or degree type) before falling back to
    /// plain recognition.
    fn decide(
        &self,
        state: &mut BotState,
        utterance: &str,
        selected_button: Option<&str>,
    ) -> SystemReply {
        let act = match selected_button {
            Some(button) => {
                if let Some(record) = self.catalog.get(button) {
                    DialogueAct::new(
                        INTENT_PROGRAM_INFO,
                        BTreeMap::from([(ENTITY_PROGRAM.to_string(), record.name.clone())]),
                        1.0,
                    )
                } else if self
                    .catalog
                    .degree_types()
                    .iter()
                    .any(|d| d.eq_ignore_ascii_case(button))
                {
                    DialogueAct::new(
                        INTENT_LIST_PROGRAMS,
                        BTreeMap::from([(ENTITY_DEGREE_TYPE.to_string(), button.to_string())]),
                        1.0,
                    )
                } else {
                    recognize(button, &self.catalog, state)
                }
            }
            None => recognize(utterance, &self.catalog, state),
        };

        let reply = match act.intent.as_str() {
            INTENT_GREETING => SystemReply::text(GREETING_REPLY),
            INTENT_FALLBACK => SystemReply::text(FALLBACK_REPLY),
            _ => match execute_query(&self.catalog, &act, state) {
                Ok(result) => render_template(&self.catalog, &result),
                Err(QueryError::MissingProgram { attribute }) => SystemReply::text(format!(
                    "Which program do you mean? Ask about the {} of a specific program, for example Computer Science.",
                    attribute_label(&attribute).to_lowercase()
                )),
                Err(QueryError::UnknownProgram(name)) => SystemReply::text(format!(
                    "I could not find a program called '{name}'. You can ask for all Bachelor or Master programs to see what we offer."
                )),
                Err(_) => SystemReply::text(FALLBACK_REPLY),
            },
        };
        state.last_act = Some(act);
        reply
    }

    /// Answer one user turn: decide the templated reply, then reword it
    /// through the paraphraser when one is configured. A paraphrase
    /// failure logs a warning and falls back to the template, so this
    /// never errors.
    pub fn respond(&self, state: &mut BotState, user_turn: &Turn) -> SystemReply {
        let reply = self.decide(
            state,
            &user_turn.utterance,
            user_turn.selected_button.as_deref(),
        );
        let Some(backend) = &self.paraphraser else {
            return reply;
        };
        let intent = state
            .last_act
            .as_ref()
            .map(|a| a.intent.clone())
            .unwrap_or_else(|| INTENT_FALLBACK.to_string());
        let request = paraphrase_request(&intent, &reply.utterance);
        match with_retry(backend.as_ref(), &request, &self.retry_policy) {
            Ok(response) => SystemReply {
                utterance: response.content.trim().to_string(),
                buttons: reply.buttons,
            },
            Err(error) => {
                tracing::warn!(%error, "paraphrase failed; falling back to the templated reply");
                reply
            }
        }
    }

    /// Re-derive session state by replaying all prior user turns
    /// through the (deterministic) template path.
    fn replay_state(&self, prior_turns: &[Turn]) -> BotState {
        let mut state = BotState::default();
        for turn in prior_turns.iter().filter(|t| t.speaker == Speaker::User) {
            let _ = self.decide(&mut state, &turn.utterance, turn.selected_button.as_deref());
        }
        state
    }
}

impl SystemAdapter for StudyBot {
    /// The in-process adapter is stateless across calls: it replays the
    /// history to rebuild the session state, so it serves any session
    /// id without bookkeeping.
    fn respond(&self, _session_id: &str, history: &[Turn]) -> Result<SystemReply, SystemError> {
        let Some((last, prior)) = history.split_last() else {
            return Ok(SystemReply::text(GREETING_REPLY));
        };
        if last.speaker != Speaker::User {
            return Err(SystemError::Other(
                "history must end with a user turn".to_string(),
            ));
        }
        let mut state = self.replay_state(prior);
        Ok(StudyBot::respond(self, &mut state, last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ScriptedBackend;

    fn catalog() -> ProgramCatalog {
        ProgramCatalog::bundled()
    }

    fn act_for(utterance: &str) -> DialogueAct {
        recognize(utterance, &catalog(), &BotState::default())
    }

    #[test]
    fn bundled_catalog_has_the_full_shape() {
        let c = catalog();
        assert_eq!(c.programs().len(), 12);
        assert_eq!(c.degree_types(), vec!["Bachelor", "Master"]);
        assert_eq!(c.attribute_names().len(), 16);
        for p in c.programs() {
            for attr in ATTRIBUTES {
                assert!(
                    !p.attribute(attr).unwrap().trim().is_empty(),
                    "{} has empty {attr}",
                    p.name
                );
            }
        }
    }

    #[test]
    fn catalog_rejects_duplicate_names() {
        let mut programs = catalog().programs().to_vec();
        let mut clone = programs[0].clone();
        clone.name = programs[0].name.to_uppercase();
        programs.push(clone);
        match ProgramCatalog::new(programs).unwrap_err() {
            CatalogError::MalformedRecord { index: 13, detail } => {
                assert!(detail.contains("duplicate"), "{detail}")
            }
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn catalog_rejects_blank_names_and_emptiness() {
        let mut programs = catalog().programs().to_vec();
        programs[2].name = "  ".to_string();
        assert!(matches!(
            ProgramCatalog::new(programs).unwrap_err(),
            CatalogError::MalformedRecord { index: 3, .. }
        ));
        assert!(matches!(
            ProgramCatalog::new(Vec::new()).unwrap_err(),
            CatalogError::EmptyCatalog
        ));
    }

    #[test]
    fn catalog_roundtrips_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("programs.jsonl");
        crate::jsonl::write_jsonl(&path, catalog().programs()).unwrap();
        let loaded = ProgramCatalog::from_jsonl_path(&path).unwrap();
        assert_eq!(loaded, catalog());
    }

    #[test]
    fn recognizes_attribute_query_with_program() {
        let act = act_for("How many ECTS points does Computer Science have?");
        assert_eq!(act.intent, "ects_points");
        assert_eq!(
            act.entities.get(ENTITY_PROGRAM).map(String::as_str),
            Some("Computer Science")
        );
        assert!(act.confidence > 0.0 && act.confidence <= 1.0);
    }

    #[test]
    fn attribute_query_resolves_it_from_state() {
        let state = BotState {
            active_program: Some("Computer Science".to_string()),
            ..BotState::default()
        };
        let act = recognize("How many ECTS points does it have?", &catalog(), &state);
        assert_eq!(act.intent, "ects_points");
        assert_eq!(
            act.entities.get(ENTITY_PROGRAM).map(String::as_str),
            Some("Computer Science")
        );
    }

    #[test]
    fn longer_keyword_beats_shorter() {
        // Both "admission restriction" and "restriction" match; the
        // longer keyword wins over shorter alternatives.
        let act = act_for("Does Urban Planning have an admission restriction?");
        assert_eq!(act.intent, "admission_restriction");
        assert_eq!(
            act.entities.get(ENTITY_PROGRAM).map(String::as_str),
            Some("Urban Planning")
        );
    }

    #[test]
    fn equal_length_keyword_tie_breaks_lexicographically() {
        // "fees" and "link" are both four characters; program_website
        // sorts before tuition_fees.
        let act = act_for("fees link");
        assert_eq!(act.intent, "program_website");
    }

    #[test]
    fn recognizes_degree_filtered_listing() {
        let act = act_for("Which Master programs can I study?");
        assert_eq!(act.intent, INTENT_LIST_PROGRAMS);
        assert_eq!(
            act.entities.get(ENTITY_DEGREE_TYPE).map(String::as_str),
            Some("Master")
        );
    }

    #[test]
    fn recognizes_interest_search() {
        let act = act_for("renewable energy programs");
        assert_eq!(act.intent, INTENT_INTEREST_SEARCH);
        let keywords = act.entities.get(ENTITY_KEYWORDS).unwrap();
        assert!(keywords.contains("renewable") && keywords.contains("energy"));
    }

    #[test]
    fn recognizes_bare_program_mention() {
        let act = act_for("I am interested in the Environmental Engineering program");
        assert_eq!(act.intent, INTENT_PROGRAM_INFO);
        assert_eq!(
            act.entities.get(ENTITY_PROGRAM).map(String::as_str),
            Some("Environmental Engineering")
        );
    }

    #[test]
    fn greeting_and_fallback() {
        assert_eq!(act_for("Hi there!").intent, INTENT_GREETING);
        let empty = act_for("");
        assert_eq!(empty.intent, INTENT_FALLBACK);
        assert_eq!(empty.confidence, 0.0);
        assert_eq!(act_for("qqq xyzzy").intent, INTENT_FALLBACK);
        // "nothing" contains "hi" as a substring but is not a greeting.
        assert_eq!(act_for("nothing").intent, INTENT_FALLBACK);
    }

    #[test]
    fn listing_request_outranks_greeting() {
        let act = act_for("Hi! Which programs are there?");
        assert_eq!(act.intent, INTENT_LIST_PROGRAMS);
    }

    #[test]
    fn attribute_query_updates_active_program() {
        let c = catalog();
        let mut state = BotState::default();
        let act = recognize(
            "How many ECTS points does Computer Science have?",
            &c,
            &state,
        );
        let result = execute_query(&c, &act, &mut state).unwrap();
        assert_eq!(
            result,
            QueryResult::AttributeValue {
                program: "Computer Science".to_string(),
                attribute: "ects_points".to_string(),
                value: "120".to_string(),
            }
        );
        assert_eq!(state.active_program.as_deref(), Some("Computer Science"));
    }

    #[test]
    fn attribute_without_program_is_missing_program() {
        let c = catalog();
        let mut state = BotState::default();
        let act = recognize("How many ECTS points does it have?", &c, &state);
        let err = execute_query(&c, &act, &mut state).unwrap_err();
        assert_eq!(
            err,
            QueryError::MissingProgram {
                attribute: "ects_points".to_string()
            }
        );
    }

    #[test]
    fn unknown_program_is_reported() {
        let c = catalog();
        let mut state = BotState::default();
        let act = DialogueAct::new(
            "ects_points",
            BTreeMap::from([(ENTITY_PROGRAM.to_string(), "Astrobasketweaving".to_string())]),
            1.0,
        );
        let err = execute_query(&c, &act, &mut state).unwrap_err();
        assert_eq!(
            err,
            QueryError::UnknownProgram("Astrobasketweaving".to_string())
        );
    }

    #[test]
    fn interest_search_ranks_by_keyword_overlap() {
        let c = catalog();
        let mut state = BotState::default();
        let act = act_for("renewable energy programs");
        let result = execute_query(&c, &act, &mut state).unwrap();
        let QueryResult::ProgramList { programs, .. } = &result else {
            panic!("expected a program list");
        };
        assert_eq!(programs[0], "Renewable Energy Systems");
        assert!(programs.len() >= 2, "{programs:?}");
        let reply = render_template(&c, &result);
        assert_eq!(&reply.buttons, programs);
    }

    #[test]
    fn master_listing_renders_buttons() {
        let c = catalog();
        let mut state = BotState::default();
        let act = act_for("Which Master programs can I study?");
        let result = execute_query(&c, &act, &mut state).unwrap();
        let reply = render_template(&c, &result);
        assert_eq!(reply.buttons.len(), 7);
        assert!(reply
            .buttons
            .contains(&"Renewable Energy Systems".to_string()));
        assert_eq!(
            state.slots.get(ENTITY_DEGREE_TYPE).map(String::as_str),
            Some("Master")
        );
    }

    #[test]
    fn unfiltered_listing_narrows_down_by_degree_type() {
        let c = catalog();
        let mut state = BotState::default();
        let act = act_for("Which programs are there?");
        let result = execute_query(&c, &act, &mut state).unwrap();
        let reply = render_template(&c, &result);
        assert_eq!(reply.buttons, vec!["Bachelor", "Master"]);
        assert!(reply.utterance.contains("12"));
    }

    #[test]
    fn single_row_lists_inline_without_buttons() {
        let c = catalog();
        let mut state = BotState::default();
        let act = act_for("I want to study telecommunications at your university");
        assert_eq!(act.intent, INTENT_INTEREST_SEARCH);
        let result = execute_query(&c, &act, &mut state).unwrap();
        let reply = render_template(&c, &result);
        assert!(reply.buttons.is_empty());
        assert!(reply
            .utterance
            .starts_with("There is one matching program. Telecommunications Engineering:"));
    }

    #[test]
    fn button_selection_describes_the_program() {
        let bot = StudyBot::new(catalog());
        let mut state = BotState::default();
        let turn = Turn::selection(3, "Renewable Energy Systems");
        let reply = bot.respond(&mut state, &turn);
        let expected = catalog()
            .get("Renewable Energy Systems")
            .unwrap()
            .program_description
            .clone();
        assert_eq!(
            reply.utterance,
            format!("Renewable Energy Systems: {expected}")
        );
        assert_eq!(
            state.active_program.as_deref(),
            Some("Renewable Energy Systems")
        );
        assert_eq!(state.last_act.as_ref().unwrap().intent, INTENT_PROGRAM_INFO);
    }

    #[test]
    fn degree_type_button_lists_programs() {
        let bot = StudyBot::new(catalog());
        let mut state = BotState::default();
        let turn = Turn::selection(3, "Bachelor");
        let reply = bot.respond(&mut state, &turn);
        assert_eq!(reply.buttons.len(), 5);
    }

    #[test]
    fn adapter_replays_history_for_carryover() {
        let bot = StudyBot::new(catalog());
        let history = vec![
            Turn::user(
                1,
                "What are the admission requirements for Computer Science?",
            ),
            Turn::system(2, "placeholder", vec![]),
            Turn::user(3, "And how many ECTS points does it have?"),
        ];
        let reply = SystemAdapter::respond(&bot, "sess_test", &history).unwrap();
        assert_eq!(reply.utterance, "ECTS points of Computer Science: 120");
    }

    #[test]
    fn adapter_rejects_history_ending_with_system_turn() {
        let bot = StudyBot::new(catalog());
        let history = vec![Turn::user(1, "hi"), Turn::system(2, "hello", vec![])];
        assert!(SystemAdapter::respond(&bot, "sess_test", &history).is_err());
    }

    #[test]
    fn templates_ground_every_value_verbatim() {
        let c = catalog();
        for p in c.programs() {
            for attr in ATTRIBUTES {
                let result = QueryResult::AttributeValue {
                    program: p.name.clone(),
                    attribute: attr.to_string(),
                    value: p.attribute(attr).unwrap().to_string(),
                };
                let reply = render_template(&c, &result);
                assert!(
                    reply.utterance.contains(p.attribute(attr).unwrap()),
                    "value of {attr} not verbatim in reply"
                );
            }
        }
    }

    #[test]
    fn llm_render_rewords_but_keeps_buttons() {
        let c = catalog();
        let act = act_for("Which Master programs can I study?");
        let mut state = BotState::default();
        let result = execute_query(&c, &act, &mut state).unwrap();
        let backend = ScriptedBackend::from_replies("responder", ["Here are our Master programs!"]);
        let reply = render_response(
            &c,
            &act,
            &result,
            RenderMode::Llm,
            Some(&backend),
            &RetryPolicy::no_retry(),
        )
        .unwrap();
        assert_eq!(reply.utterance, "Here are our Master programs!");
        assert_eq!(reply.buttons.len(), 7);
    }

    #[test]
    fn paraphrase_failure_falls_back_to_template() {
        let backend = ScriptedBackend::from_replies("responder", Vec::<String>::new());
        let bot = StudyBot::new(catalog())
            .with_paraphraser(Box::new(backend))
            .with_retry_policy(RetryPolicy::no_retry());
        let mut state = BotState::default();
        let turn = Turn::user(1, "How many ECTS points does Computer Science have?");
        let reply = bot.respond(&mut state, &turn);
        assert_eq!(reply.utterance, "ECTS points of Computer Science: 120");
    }

    #[test]
    fn garbage_input_gets_a_clarification_not_an_error() {
        let bot = StudyBot::new(catalog());
        let history = vec![Turn::user(1, "fnord blub")];
        let reply = SystemAdapter::respond(&bot, "sess_test", &history).unwrap();
        assert_eq!(reply.utterance, FALLBACK_REPLY);
    }
}

//! Persona schema: the profile template, the generated user record, and
//! validation of LLM output against the template.
//!
//! A template partitions every profile field into one of four categories:
//! fixed constants, closed enum choices, free-form strings/lists, and
//! bounded integers. LLM completions are parsed leniently (field by field
//! from the first balanced JSON object in the text) and validated
//! strictly, so a rejection carries the full list of violations instead
//! of the first serde error.

use std::collections::BTreeMap;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FIELD_USER_ROLE: &str = "user_role";
pub const FIELD_PRIMARY_GOAL: &str = "primary_goal";

pub const DEFAULT_USER_ROLE: &str = "prospective student";
pub const DEFAULT_PRIMARY_GOAL: &str = "find_relevant_study_programs";

pub const PERSONALITY_DIMENSIONS: [&str; 5] = [
    "openness",
    "conscientiousness",
    "extraversion",
    "agreeableness",
    "neuroticism",
];

/// Secondary goals every template offers; extendable via
/// [`PersonaTemplate::with_extra_secondary_goals`].
pub const BASE_SECONDARY_GOALS: [&str; 5] = [
    "module_contents",
    "acquired_skills",
    "admission_requirements",
    "admission_restriction",
    "structure_of_the_program",
];

/// Profile schema. Loadable from JSON so the field set can evolve
/// without a recompile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaTemplate {
    /// field name -> constant value
    pub fixed_fields: BTreeMap<String, String>,
    /// field name -> ordered list of allowed values
    pub enum_fields: BTreeMap<String, Vec<String>>,
    /// unconstrained string / string-list fields
    pub free_fields: Vec<String>,
    /// field name -> inclusive integer range
    pub numeric_fields: BTreeMap<String, (i64, i64)>,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("field `{0}` appears in more than one category")]
    DuplicateField(String),
    #[error("enum field `{0}` has an empty or duplicated option list")]
    BadEnumOptions(String),
    #[error("numeric field `{0}` has min > max")]
    BadRange(String),
    #[error("template json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PersonaTemplate {
    /// The canonical prospective-student schema.
    pub fn default_template() -> Self {
        let mut fixed_fields = BTreeMap::new();
        fixed_fields.insert(FIELD_USER_ROLE.to_string(), DEFAULT_USER_ROLE.to_string());
        fixed_fields.insert(
            FIELD_PRIMARY_GOAL.to_string(),
            DEFAULT_PRIMARY_GOAL.to_string(),
        );

        let mut enum_fields = BTreeMap::new();
        enum_fields.insert(
            "gender".to_string(),
            vec!["female".into(), "male".into(), "diverse".into()],
        );
        enum_fields.insert(
            "desired_degree".to_string(),
            vec![
                "Bachelor".into(),
                "Master".into(),
                "Exchange student".into(),
                "not sure".into(),
            ],
        );
        enum_fields.insert(
            "region".to_string(),
            vec![
                "asian".into(),
                "non-german european".into(),
                "south-american".into(),
                "north-american".into(),
                "african".into(),
                "middle_east".into(),
                "south-east asian".into(),
                "australian".into(),
                "german".into(),
            ],
        );
        enum_fields.insert(
            "communication_type".to_string(),
            vec!["formal".into(), "informal".into()],
        );
        enum_fields.insert(
            "language_preference".to_string(),
            vec!["english".into(), "german".into()],
        );
        enum_fields.insert(
            "secondary_goals".to_string(),
            BASE_SECONDARY_GOALS.iter().map(|s| s.to_string()).collect(),
        );

        let free_fields = vec![
            "general_interests".to_string(),
            "nationality".to_string(),
            "initial_knowledge".to_string(),
        ];

        let mut numeric_fields = BTreeMap::new();
        numeric_fields.insert("age".to_string(), (16, 80));
        for dim in PERSONALITY_DIMENSIONS {
            numeric_fields.insert(dim.to_string(), (1, 5));
        }

        Self {
            fixed_fields,
            enum_fields,
            free_fields,
            numeric_fields,
        }
    }

    /// Extend the secondary-goal option list (campaign-specific goals).
    pub fn with_extra_secondary_goals<I: IntoIterator<Item = String>>(mut self, extra: I) -> Self {
        let opts = self
            .enum_fields
            .entry("secondary_goals".to_string())
            .or_default();
        for goal in extra {
            let goal = snake_case(&goal);
            if !opts.contains(&goal) {
                opts.push(goal);
            }
        }
        self
    }

    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let template: Self = serde_json::from_str(text)?;
        template.check()?;
        Ok(template)
    }

    /// Enforce the structural invariants: field names partitioned across
    /// the four categories, enum options non-empty and duplicate-free,
    /// numeric ranges ordered.
    pub fn check(&self) -> Result<(), TemplateError> {
        let mut seen = std::collections::BTreeSet::new();
        let all = self
            .fixed_fields
            .keys()
            .chain(self.enum_fields.keys())
            .chain(self.free_fields.iter())
            .chain(self.numeric_fields.keys());
        for name in all {
            if !seen.insert(name.clone()) {
                return Err(TemplateError::DuplicateField(name.clone()));
            }
        }
        for (name, opts) in &self.enum_fields {
            let distinct: std::collections::BTreeSet<_> = opts.iter().collect();
            if opts.is_empty() || distinct.len() != opts.len() {
                return Err(TemplateError::BadEnumOptions(name.clone()));
            }
        }
        for (name, (lo, hi)) in &self.numeric_fields {
            if lo > hi {
                return Err(TemplateError::BadRange(name.clone()));
            }
        }
        Ok(())
    }

    pub fn enum_options(&self, field: &str) -> Option<&[String]> {
        self.enum_fields.get(field).map(|v| v.as_slice())
    }

    pub fn numeric_range(&self, field: &str) -> Option<(i64, i64)> {
        self.numeric_fields.get(field).copied()
    }

    /// The JSON skeleton the LLM is asked to fill in.
    pub fn fill_in_json(&self) -> serde_json::Value {
        use serde_json::{json, Value};
        let mut obj = serde_json::Map::new();
        for (name, value) in &self.fixed_fields {
            if name == FIELD_PRIMARY_GOAL {
                continue; // rendered inside user_goals below
            }
            obj.insert(name.clone(), Value::String(value.clone()));
        }
        for (name, (lo, hi)) in &self.numeric_fields {
            obj.insert(
                name.clone(),
                Value::String(format!("<integer between {lo} and {hi}>")),
            );
        }
        for (name, opts) in &self.enum_fields {
            if name == "secondary_goals" {
                continue; // rendered inside user_goals below
            }
            obj.insert(
                name.clone(),
                Value::String(format!("<one of: {}>", opts.join(" | "))),
            );
        }
        for name in &self.free_fields {
            if name == "general_interests" {
                obj.insert(name.clone(), json!(["<snake_case topic>", "..."]));
            } else {
                obj.insert(name.clone(), Value::String("<free text>".to_string()));
            }
        }
        // personality dimensions grouped into one object
        let mut personality = serde_json::Map::new();
        for dim in PERSONALITY_DIMENSIONS {
            if let Some(v) = obj.remove(dim) {
                personality.insert(dim.to_string(), v);
            }
        }
        obj.insert("personality".to_string(), Value::Object(personality));
        let secondary_hint = self
            .enum_options("secondary_goals")
            .map(|opts| format!("<1 to 3 of: {}>", opts.join(" | ")))
            .unwrap_or_else(|| "<secondary goals>".to_string());
        obj.insert(
            "user_goals".to_string(),
            json!({
                FIELD_PRIMARY_GOAL: self
                    .fixed_fields
                    .get(FIELD_PRIMARY_GOAL)
                    .cloned()
                    .unwrap_or_default(),
                "secondary_goals": [secondary_hint],
            }),
        );
        Value::Object(obj)
    }
}

/// Big Five scores, each 1-5 in the default template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Personality {
    pub openness: i64,
    pub conscientiousness: i64,
    pub extraversion: i64,
    pub agreeableness: i64,
    pub neuroticism: i64,
}

impl Personality {
    pub fn get(&self, dimension: &str) -> Option<i64> {
        match dimension {
            "openness" => Some(self.openness),
            "conscientiousness" => Some(self.conscientiousness),
            "extraversion" => Some(self.extraversion),
            "agreeableness" => Some(self.agreeableness),
            "neuroticism" => Some(self.neuroticism),
            _ => None,
        }
    }

    pub fn dimensions(&self) -> impl Iterator<Item = (&'static str, i64)> + '_ {
        PERSONALITY_DIMENSIONS
            .iter()
            .map(move |d| (*d, self.get(d).unwrap()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoals {
    pub primary_goal: String,
    pub secondary_goals: Vec<String>,
}

/// A generated synthetic user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    #[serde(default)]
    pub id: String,
    pub age: i64,
    pub gender: String,
    pub region: String,
    pub nationality: String,
    pub desired_degree: String,
    pub language_preference: String,
    pub communication_type: String,
    pub personality: Personality,
    pub general_interests: Vec<String>,
    pub user_goals: UserGoals,
    pub initial_knowledge: String,
    #[serde(default = "epoch")]
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub generator_model: String,
}

fn epoch() -> DateTime<Utc> {
    Utc.timestamp_opt(0, 0).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Missing,
    WrongType,
    NotInEnum,
    OutOfRange,
    Empty,
    FixedMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub kind: ViolationKind,
    pub message: String,
}

/// Outcome of validating a persona against its template. `ok` holds
/// exactly when `violations` is empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &str, kind: ViolationKind, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            kind,
            message: message.into(),
        });
    }

    /// One line per violation, used as retry feedback to the model.
    pub fn describe(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{}: {}", v.field, v.message))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl std::fmt::Display for ValidationResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ok() {
            write!(f, "ok")
        } else {
            write!(f, "{}", self.describe())
        }
    }
}

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("no parseable JSON object in completion: {0}")]
    MalformedJson(String),
    #[error("persona violates template: {0}")]
    SchemaViolation(ValidationResult),
}

/// Lowercase and join whitespace runs with underscores. Applied to
/// interests and goals so analytics keys stay consistent across models.
pub fn snake_case(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

/// Extract the first balanced top-level JSON object from free text.
/// Models routinely wrap their JSON in prose or code fences.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Case-insensitive match against the option list, returning the
/// canonical option string.
fn canonical_enum_value(raw: &str, options: &[String]) -> Option<String> {
    let trimmed = raw.trim();
    options
        .iter()
        .find(|o| o.as_str() == trimmed)
        .or_else(|| options.iter().find(|o| o.eq_ignore_ascii_case(trimmed)))
        .cloned()
}

fn value_as_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn value_as_int(v: &serde_json::Value) -> Option<i64> {
    match v {
        serde_json::Value::Number(n) => n.as_i64(),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn get_string(
    obj: &serde_json::Map<String, serde_json::Value>,
    name: &str,
    required: bool,
    result: &mut ValidationResult,
) -> String {
    match obj.get(name) {
        Some(v) => value_as_string(v).unwrap_or_else(|| {
            result.push(name, ViolationKind::WrongType, "expected a string");
            String::new()
        }),
        None => {
            if required {
                result.push(name, ViolationKind::Missing, "field is missing");
            }
            String::new()
        }
    }
}

fn get_enum(
    obj: &serde_json::Map<String, serde_json::Value>,
    template: &PersonaTemplate,
    name: &str,
    result: &mut ValidationResult,
) -> String {
    let options = match template.enum_options(name) {
        Some(o) => o,
        None => return get_string(obj, name, true, result),
    };
    match obj.get(name) {
        None => {
            result.push(name, ViolationKind::Missing, "field is missing");
            String::new()
        }
        Some(v) => match value_as_string(v) {
            None => {
                result.push(name, ViolationKind::WrongType, "expected a string");
                String::new()
            }
            Some(raw) => canonical_enum_value(&raw, options).unwrap_or_else(|| {
                result.push(
                    name,
                    ViolationKind::NotInEnum,
                    format!("`{}` not in [{}]", raw.trim(), options.join(", ")),
                );
                raw.trim().to_string()
            }),
        },
    }
}

/// Parse a raw LLM completion into a [`Persona`].
///
/// Fields are extracted by template field name; unknown extra keys are
/// ignored with a warning. Validation runs before returning, so a
/// successfully parsed persona always satisfies [`validate_persona`].
pub fn parse_persona(json_text: &str, template: &PersonaTemplate) -> Result<Persona, PersonaError> {
    let object_text = extract_json_object(json_text)
        .ok_or_else(|| PersonaError::MalformedJson(preview(json_text)))?;
    let value: serde_json::Value = serde_json::from_str(object_text)
        .map_err(|e| PersonaError::MalformedJson(format!("{e}: {}", preview(object_text))))?;
    let obj = value
        .as_object()
        .ok_or_else(|| PersonaError::MalformedJson("top-level value is not an object".into()))?;

    let mut result = ValidationResult::default();

    let known_keys = [
        "id",
        "age",
        "gender",
        "region",
        "nationality",
        "desired_degree",
        "language_preference",
        "communication_type",
        "personality",
        "general_interests",
        "user_goals",
        "initial_knowledge",
        "created_at",
        "generator_model",
        FIELD_USER_ROLE,
    ];
    for key in obj.keys() {
        if !known_keys.contains(&key.as_str()) {
            tracing::warn!(key = %key, "ignoring unknown persona field");
        }
    }

    let id = get_string(obj, "id", false, &mut result);
    let nationality = get_string(obj, "nationality", true, &mut result);
    let initial_knowledge = get_string(obj, "initial_knowledge", true, &mut result);
    let generator_model = get_string(obj, "generator_model", false, &mut result);
    let created_at = obj
        .get("created_at")
        .and_then(|v| v.as_str())
        .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
        .map(|t| t.with_timezone(&Utc))
        .unwrap_or_else(epoch);

    let gender = get_enum(obj, template, "gender", &mut result);
    let region = get_enum(obj, template, "region", &mut result);
    let desired_degree = get_enum(obj, template, "desired_degree", &mut result);
    let language_preference = get_enum(obj, template, "language_preference", &mut result);
    let communication_type = get_enum(obj, template, "communication_type", &mut result);

    let age = match obj.get("age") {
        None => {
            result.push("age", ViolationKind::Missing, "field is missing");
            0
        }
        Some(v) => value_as_int(v).unwrap_or_else(|| {
            result.push("age", ViolationKind::WrongType, "expected an integer");
            0
        }),
    };

    let mut personality = Personality {
        openness: 0,
        conscientiousness: 0,
        extraversion: 0,
        agreeableness: 0,
        neuroticism: 0,
    };
    match obj.get("personality") {
        None => result.push("personality", ViolationKind::Missing, "field is missing"),
        Some(serde_json::Value::Object(dims)) => {
            for dim in PERSONALITY_DIMENSIONS {
                let slot = match dim {
                    "openness" => &mut personality.openness,
                    "conscientiousness" => &mut personality.conscientiousness,
                    "extraversion" => &mut personality.extraversion,
                    "agreeableness" => &mut personality.agreeableness,
                    _ => &mut personality.neuroticism,
                };
                match dims.get(dim).and_then(value_as_int) {
                    Some(v) => *slot = v,
                    None => result.push(
                        &format!("personality.{dim}"),
                        ViolationKind::Missing,
                        "dimension missing or not an integer",
                    ),
                }
            }
        }
        Some(_) => result.push(
            "personality",
            ViolationKind::WrongType,
            "expected an object",
        ),
    }

    let general_interests = match obj.get("general_interests") {
        None => {
            result.push(
                "general_interests",
                ViolationKind::Missing,
                "field is missing",
            );
            Vec::new()
        }
        Some(serde_json::Value::Array(items)) => normalize_string_list(items),
        Some(serde_json::Value::String(s)) => {
            normalize_string_list(&[serde_json::Value::String(s.clone())])
        }
        Some(_) => {
            result.push(
                "general_interests",
                ViolationKind::WrongType,
                "expected a list of strings",
            );
            Vec::new()
        }
    };

    let fixed_primary = template
        .fixed_fields
        .get(FIELD_PRIMARY_GOAL)
        .cloned()
        .unwrap_or_default();
    let user_goals = match obj.get("user_goals") {
        None => {
            result.push("user_goals", ViolationKind::Missing, "field is missing");
            UserGoals {
                primary_goal: fixed_primary.clone(),
                secondary_goals: Vec::new(),
            }
        }
        Some(serde_json::Value::Object(goals)) => {
            let primary_goal = match goals.get(FIELD_PRIMARY_GOAL).and_then(value_as_string) {
                Some(p) => snake_case(&p),
                None => fixed_primary.clone(),
            };
            let secondary_goals = match goals.get("secondary_goals") {
                Some(serde_json::Value::Array(items)) => normalize_string_list(items),
                _ => {
                    result.push(
                        "user_goals.secondary_goals",
                        ViolationKind::Missing,
                        "expected a list of goals",
                    );
                    Vec::new()
                }
            };
            UserGoals {
                primary_goal,
                secondary_goals,
            }
        }
        Some(_) => {
            result.push("user_goals", ViolationKind::WrongType, "expected an object");
            UserGoals {
                primary_goal: fixed_primary.clone(),
                secondary_goals: Vec::new(),
            }
        }
    };

    // fixed fields are validated when the model supplies them
    if let Some(expected) = template.fixed_fields.get(FIELD_USER_ROLE) {
        if let Some(actual) = obj.get(FIELD_USER_ROLE).and_then(value_as_string) {
            if !actual.trim().eq_ignore_ascii_case(expected) {
                result.push(
                    FIELD_USER_ROLE,
                    ViolationKind::FixedMismatch,
                    format!("must be `{expected}`"),
                );
            }
        }
    }

    let persona = Persona {
        id,
        age,
        gender,
        region,
        nationality,
        desired_degree,
        language_preference,
        communication_type,
        personality,
        general_interests,
        user_goals,
        initial_knowledge,
        created_at,
        generator_model,
    };

    let mut validation = validate_persona(&persona, template);
    // parse-level violations come first; dedupe fields already reported
    let parse_fields: std::collections::BTreeSet<String> =
        result.violations.iter().map(|v| v.field.clone()).collect();
    validation
        .violations
        .retain(|v| !parse_fields.contains(&v.field));
    result.violations.extend(validation.violations);

    if result.ok() {
        Ok(persona)
    } else {
        Err(PersonaError::SchemaViolation(result))
    }
}

fn normalize_string_list(items: &[serde_json::Value]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        if let Some(s) = value_as_string(item) {
            let normalized = snake_case(&s);
            if !normalized.is_empty() && !out.contains(&normalized) {
                out.push(normalized);
            }
        }
    }
    out
}

fn preview(text: &str) -> String {
    let t = text.trim();
    if t.chars().count() > 120 {
        let cut: String = t.chars().take(120).collect();
        format!("{cut}…")
    } else {
        t.to_string()
    }
}

/// Check every persona invariant against the template. Violations are
/// data, not errors; every failing field is listed.
pub fn validate_persona(p: &Persona, template: &PersonaTemplate) -> ValidationResult {
    let mut result = ValidationResult::default();

    let mut check_enum = |field: &str, value: &str| {
        if let Some(options) = template.enum_options(field) {
            if !options.iter().any(|o| o == value) {
                result.push(
                    field,
                    ViolationKind::NotInEnum,
                    format!("`{value}` not in [{}]", options.join(", ")),
                );
            }
        }
    };
    check_enum("gender", &p.gender);
    check_enum("region", &p.region);
    check_enum("desired_degree", &p.desired_degree);
    check_enum("language_preference", &p.language_preference);
    check_enum("communication_type", &p.communication_type);

    if p.age <= 0 {
        result.push("age", ViolationKind::OutOfRange, "age must be positive");
    } else if let Some((lo, hi)) = template.numeric_range("age") {
        if p.age < lo || p.age > hi {
            result.push(
                "age",
                ViolationKind::OutOfRange,
                format!("{} outside [{lo}, {hi}]", p.age),
            );
        }
    }

    for (dim, value) in p.personality.dimensions() {
        let (lo, hi) = template.numeric_range(dim).unwrap_or((1, 5));
        if value < lo || value > hi {
            result.push(
                &format!("personality.{dim}"),
                ViolationKind::OutOfRange,
                format!("{value} outside [{lo}, {hi}]"),
            );
        }
    }

    if p.general_interests.is_empty() {
        result.push(
            "general_interests",
            ViolationKind::Empty,
            "at least one interest required",
        );
    }

    if p.user_goals.secondary_goals.is_empty() {
        result.push(
            "user_goals.secondary_goals",
            ViolationKind::Empty,
            "at least one secondary goal required",
        );
    } else if let Some(options) = template.enum_options("secondary_goals") {
        for goal in &p.user_goals.secondary_goals {
            if !options.iter().any(|o| o == goal) {
                result.push(
                    "user_goals.secondary_goals",
                    ViolationKind::NotInEnum,
                    format!("`{goal}` not in [{}]", options.join(", ")),
                );
            }
        }
    }

    if let Some(expected) = template.fixed_fields.get(FIELD_PRIMARY_GOAL) {
        if &p.user_goals.primary_goal != expected {
            result.push(
                "user_goals.primary_goal",
                ViolationKind::FixedMismatch,
                format!("must be `{expected}`"),
            );
        }
    }

    result
}

/// All goals a session judge has to assess: the fixed primary goal plus
/// every secondary goal, in persona order.
pub fn judged_goals(p: &Persona) -> Vec<String> {
    let mut goals = vec![p.user_goals.primary_goal.clone()];
    for g in &p.user_goals.secondary_goals {
        if !goals.contains(g) {
            goals.push(g.clone());
        }
    }
    goals
}

/// Every value a persona holds for a named attribute: one value for
/// single-valued attributes (numbers rendered as strings), the full
/// list for `general_interests` and `secondary_goals`, `None` for an
/// unknown attribute name.
pub fn attribute_values(p: &Persona, attribute: &str) -> Option<Vec<String>> {
    let values = match attribute {
        "age" => vec![p.age.to_string()],
        "gender" => vec![p.gender.clone()],
        "region" => vec![p.region.clone()],
        "nationality" => vec![p.nationality.clone()],
        "desired_degree" => vec![p.desired_degree.clone()],
        "language_preference" => vec![p.language_preference.clone()],
        "communication_type" => vec![p.communication_type.clone()],
        "initial_knowledge" => vec![p.initial_knowledge.clone()],
        "primary_goal" => vec![p.user_goals.primary_goal.clone()],
        "general_interests" => p.general_interests.clone(),
        "secondary_goals" => p.user_goals.secondary_goals.clone(),
        dim => vec![p.personality.get(dim)?.to_string()],
    };
    Some(values)
}

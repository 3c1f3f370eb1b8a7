//! Multi-turn dialogue simulation between a persona-driven user simulator
//! and a task-oriented dialogue system, with an LLM judge deciding goal
//! achievement after each exchange.
//!
//! A session alternates user and system turns (the user opens) until the
//! judge reports every goal met, the total turn cap is hit, or too many
//! consecutive step failures force an abort. When the cap is reached the
//! final judgment still runs, so a success at exactly the cap counts as a
//! success, not a cap-out.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::gateway::{
    with_retry, ChatBackend, ChatMessage, ChatRequest, GatewayError, RetryPolicy,
    TEMPERATURE_CREATIVE, TEMPERATURE_JUDGE,
};
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};
use crate::persona::{judged_goals, snake_case, Persona};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    System,
}

fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::from_timestamp(0, 0).expect("epoch is valid")
}

/// One utterance in a session. `index` is 1-based over all turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub utterance: String,
    /// Options offered to the user alongside a system turn; empty when
    /// the reply is free text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buttons: Vec<String>,
    /// Set on a user turn that answered a button prompt; always a
    /// verbatim member of the preceding system turn's buttons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_button: Option<String>,
    #[serde(default = "epoch")]
    pub timestamp: DateTime<Utc>,
}

impl Turn {
    pub fn user(index: usize, utterance: impl Into<String>) -> Self {
        Self {
            index,
            speaker: Speaker::User,
            utterance: utterance.into(),
            buttons: Vec::new(),
            selected_button: None,
            timestamp: epoch(),
        }
    }

    pub fn system(index: usize, utterance: impl Into<String>, buttons: Vec<String>) -> Self {
        Self {
            index,
            speaker: Speaker::System,
            utterance: utterance.into(),
            buttons,
            selected_button: None,
            timestamp: epoch(),
        }
    }

    pub fn selection(index: usize, button: impl Into<String>) -> Self {
        let button = button.into();
        Self {
            index,
            speaker: Speaker::User,
            utterance: button.clone(),
            buttons: Vec::new(),
            selected_button: Some(button),
            timestamp: epoch(),
        }
    }

    pub fn at(mut self, timestamp: DateTime<Utc>) -> Self {
        self.timestamp = timestamp;
        self
    }
}

/// Judge decision after one exchange. `judged_at_turn` is the total turn
/// count at judgment time. `all_met` is always derived from the goal
/// map, never stored or parsed, so the two cannot drift apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalVerdict {
    pub judged_at_turn: usize,
    pub per_goal: BTreeMap<String, bool>,
    /// The judge reply the verdict was parsed from, kept for audits.
    #[serde(default)]
    pub raw_judge_output: String,
    /// True when the judge reply could not be parsed even after a
    /// reformat retry; every goal is then treated as unmet.
    #[serde(default)]
    pub judge_failed: bool,
}

impl GoalVerdict {
    pub fn all_met(&self) -> bool {
        !self.judge_failed && !self.per_goal.is_empty() && self.per_goal.values().all(|met| *met)
    }

    fn unmet(goal_names: &[String], judged_at_turn: usize, raw: String) -> Self {
        Self {
            judged_at_turn,
            per_goal: goal_names.iter().map(|g| (g.clone(), false)).collect(),
            raw_judge_output: raw,
            judge_failed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionOutcome {
    Success,
    TurnCapReached,
    Aborted { reason: String },
}

impl SessionOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SessionOutcome::Success => "success",
            SessionOutcome::TurnCapReached => "turn_cap_reached",
            SessionOutcome::Aborted { .. } => "aborted",
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, SessionOutcome::Success)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Cap on total turns (user + system combined).
    pub max_turns: u32,
    /// Judge after every exchange; when false only the turn at the cap
    /// is judged.
    pub judge_every_user_turn: bool,
    /// Abort once this many consecutive step failures is exceeded.
    pub error_cap: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_turns: 20,
            judge_every_user_turn: true,
            error_cap: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub session_id: String,
    pub persona_id: String,
    pub config: SessionConfig,
    pub turns: Vec<Turn>,
    pub verdicts: Vec<GoalVerdict>,
    pub outcome: SessionOutcome,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl DialogueSession {
    pub fn total_turn_count(&self) -> usize {
        self.turns.len()
    }

    pub fn user_turn_count(&self) -> usize {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::User)
            .count()
    }

    pub fn user_utterances(&self) -> impl Iterator<Item = &str> {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::User)
            .map(|t| t.utterance.as_str())
    }

    pub fn final_verdict(&self) -> Option<&GoalVerdict> {
        self.verdicts.last()
    }
}

/// The dialogue system side of a session: given the history so far
/// (always ending with the pending user turn) produce the system reply.
/// Implementations may be in-process or HTTP clients; `session_id` lets
/// remote implementations keep per-session state.
pub trait SystemAdapter: Send + Sync {
    fn respond(&self, session_id: &str, history: &[Turn]) -> Result<SystemReply, SystemError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReply {
    pub utterance: String,
    #[serde(default)]
    pub buttons: Vec<String>,
}

impl SystemReply {
    pub fn text(utterance: impl Into<String>) -> Self {
        Self {
            utterance: utterance.into(),
            buttons: Vec::new(),
        }
    }

    pub fn with_buttons(utterance: impl Into<String>, buttons: Vec<String>) -> Self {
        Self {
            utterance: utterance.into(),
            buttons,
        }
    }
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("dialogue system failed: {0}")]
    Other(String),
}

pub const OPENING_INSTRUCTION: &str =
    "Open the conversation with your first message to the study advisory chatbot.";

fn style_directive(communication_type: &str) -> &'static str {
    if communication_type.eq_ignore_ascii_case("formal") {
        "Use a formal, polite register with complete sentences."
    } else {
        "Use a casual, informal register, like chatting with a friend."
    }
}

/// Render the role-play instructions for the user simulator: the full
/// persona as JSON plus style and behavior directives.
pub fn persona_card(p: &Persona) -> String {
    let persona_json = serde_json::to_string_pretty(p).expect("persona serializes");
    format!(
        "You are role-playing a prospective student in a chat with StudyBot, a university \
         study-program advisory chatbot. This is the user you play:\n{persona_json}\n\
         {style}\nAnswer in your preferred language ({language}). Pursue your goals and stay \
         in character. Write exactly one chat message per reply, with no quotation marks or \
         commentary.",
        style = style_directive(&p.communication_type),
        language = p.language_preference,
    )
}

/// Build the user-simulator request. The simulated user is the assistant
/// in the underlying chat: past user turns map to assistant messages and
/// past system turns to user messages, oldest first. An empty history
/// yields an opening instruction instead.
pub fn compose_user_prompt(persona: &Persona, history: &[Turn]) -> ChatRequest {
    let mut messages = vec![ChatMessage::system(persona_card(persona))];
    if history.is_empty() {
        messages.push(ChatMessage::user(OPENING_INSTRUCTION));
    } else {
        for turn in history {
            match turn.speaker {
                Speaker::User => messages.push(ChatMessage::assistant(turn.utterance.clone())),
                Speaker::System => messages.push(ChatMessage::user(render_system_turn(turn))),
            }
        }
    }
    ChatRequest::new(messages, TEMPERATURE_CREATIVE)
}

/// Build the constrained request for answering a button prompt: the
/// reply must be exactly one of the offered options, listed verbatim.
///
/// Calling this with no buttons is a usage error.
pub fn compose_button_prompt(
    persona: &Persona,
    history: &[Turn],
    buttons: &[String],
) -> ChatRequest {
    assert!(!buttons.is_empty(), "button prompt requires options");
    let mut request = compose_user_prompt(persona, history);
    let menu = buttons
        .iter()
        .map(|b| format!("- {b}"))
        .collect::<Vec<_>>()
        .join("\n");
    request.messages.push(ChatMessage::user(format!(
        "The chatbot offered you buttons. Reply with exactly one of the following options, verbatim and nothing else:\n{menu}"
    )));
    request
}

fn render_system_turn(turn: &Turn) -> String {
    if turn.buttons.is_empty() {
        turn.utterance.clone()
    } else {
        format!("{} [options: {}]", turn.utterance, turn.buttons.join(" | "))
    }
}

/// Produce the next user turn. With `pending_buttons` the reply must
/// echo one of them verbatim; after one failed retry the first option is
/// taken as a fallback and a warning is logged.
pub fn next_user_turn(
    backend: &dyn ChatBackend,
    persona: &Persona,
    history: &[Turn],
    pending_buttons: Option<&[String]>,
    retry_policy: &RetryPolicy,
) -> Result<Turn, GatewayError> {
    let index = history.len() + 1;

    let Some(buttons) = pending_buttons.filter(|b| !b.is_empty()) else {
        let request = compose_user_prompt(persona, history);
        let response = with_retry(backend, &request, retry_policy)?;
        return Ok(Turn::user(index, response.content.trim().to_string()));
    };

    for _ in 0..2 {
        let request = compose_button_prompt(persona, history, buttons);
        let response = with_retry(backend, &request, retry_policy)?;
        let cleaned = response
            .content
            .trim()
            .trim_matches(|c| c == '"' || c == '\'')
            .to_string();
        if let Some(hit) = buttons.iter().find(|b| b.as_str() == cleaned) {
            return Ok(Turn::selection(index, hit.clone()));
        }
        tracing::warn!(reply = %cleaned, "button reply did not match any offered option");
    }
    tracing::warn!(
        fallback = %buttons[0],
        "button selection failed twice; falling back to the first option"
    );
    Ok(Turn::selection(index, buttons[0].clone()))
}

pub const JUDGE_SYSTEM_PROMPT: &str = "You evaluate whether a user achieved their goals in a conversation with a study-program advisory chatbot. A goal counts as achieved only if the chatbot provided the information the goal asks for. For every goal listed, output exactly one line of the form '<goal>: yes' or '<goal>: no'. Output nothing else.";

const JUDGE_REFORMAT_INSTRUCTION: &str = "Your previous reply could not be parsed. Answer again with exactly one line per goal, each of the form '<goal>: yes' or '<goal>: no', and nothing else.";

/// Build the judge request for the goals of `persona` over `turns`.
pub fn compose_judge_prompt(persona: &Persona, turns: &[Turn]) -> ChatRequest {
    let goals = judged_goals(persona)
        .iter()
        .map(|g| format!("- {g}"))
        .collect::<Vec<_>>()
        .join("\n");
    let transcript = turns
        .iter()
        .map(|t| match t.speaker {
            Speaker::User => format!("User: {}", t.utterance),
            Speaker::System => format!("StudyBot: {}", render_system_turn(t)),
        })
        .collect::<Vec<_>>()
        .join("\n");
    ChatRequest::new(
        vec![
            ChatMessage::system(JUDGE_SYSTEM_PROMPT),
            ChatMessage::user(format!("Goals:\n{goals}\n\nConversation:\n{transcript}")),
        ],
        TEMPERATURE_JUDGE,
    )
}

/// Parse one 'goal: yes/no' line per goal. Unknown lines are ignored;
/// the first occurrence of a goal wins. Any goal without a parseable
/// line makes the whole reply unparseable.
fn parse_judge_reply(
    content: &str,
    goal_names: &[String],
) -> Result<BTreeMap<String, bool>, String> {
    let mut seen: BTreeMap<String, bool> = BTreeMap::new();
    for raw in content.lines() {
        let line = raw.trim().trim_start_matches('-').trim();
        let Some((name, value)) = line.split_once(':') else {
            continue;
        };
        let key = snake_case(name.trim());
        let value = value
            .trim()
            .trim_end_matches(['.', '!'])
            .to_ascii_lowercase();
        let met = match value.as_str() {
            "yes" => true,
            "no" => false,
            _ => continue,
        };
        seen.entry(key).or_insert(met);
    }
    let mut per_goal = BTreeMap::new();
    for goal in goal_names {
        match seen.get(goal) {
            Some(met) => {
                per_goal.insert(goal.clone(), *met);
            }
            None => return Err(format!("judge reply has no yes/no line for goal '{goal}'")),
        }
    }
    Ok(per_goal)
}

/// Run the judge. A transport failure is an `Err`. An unparseable reply
/// is retried once with a reformat instruction; a second failure yields
/// an `Ok` verdict with `judge_failed` set and every goal unmet, so the
/// session can continue.
pub fn judge_goals(
    backend: &dyn ChatBackend,
    persona: &Persona,
    turns: &[Turn],
    retry_policy: &RetryPolicy,
) -> Result<GoalVerdict, GatewayError> {
    let goal_names = judged_goals(persona);
    let mut request = compose_judge_prompt(persona, turns);
    for attempt in 0..2 {
        let response = with_retry(backend, &request, retry_policy)?;
        match parse_judge_reply(&response.content, &goal_names) {
            Ok(per_goal) => {
                return Ok(GoalVerdict {
                    judged_at_turn: turns.len(),
                    per_goal,
                    raw_judge_output: response.content,
                    judge_failed: false,
                })
            }
            Err(detail) if attempt == 0 => {
                tracing::warn!(%detail, "judge reply unparseable; requesting a reformat");
                request
                    .messages
                    .push(ChatMessage::assistant(response.content.clone()));
                request
                    .messages
                    .push(ChatMessage::user(JUDGE_REFORMAT_INSTRUCTION));
            }
            Err(detail) => {
                tracing::warn!(%detail, "judge reformat failed; recording all goals unmet");
                return Ok(GoalVerdict::unmet(
                    &goal_names,
                    turns.len(),
                    response.content,
                ));
            }
        }
    }
    unreachable!("judge loop returns within two attempts")
}

/// Run one session with system clock and default retry policy. See
/// [`SessionRunner`] for injectable clock and retries.
pub fn run_session(
    user_backend: &dyn ChatBackend,
    judge_backend: &dyn ChatBackend,
    system: &dyn SystemAdapter,
    persona: &Persona,
    config: SessionConfig,
) -> DialogueSession {
    SessionRunner::new(user_backend, judge_backend, system, &SystemClock, config).run(persona)
}

pub struct SessionRunner<'a> {
    pub user_backend: &'a dyn ChatBackend,
    pub judge_backend: &'a dyn ChatBackend,
    pub system: &'a dyn SystemAdapter,
    pub clock: &'a dyn Clock,
    pub config: SessionConfig,
    pub retry_policy: RetryPolicy,
}

enum Step<T> {
    Done(T),
    Abort(String),
}

impl<'a> SessionRunner<'a> {
    pub fn new(
        user_backend: &'a dyn ChatBackend,
        judge_backend: &'a dyn ChatBackend,
        system: &'a dyn SystemAdapter,
        clock: &'a dyn Clock,
        config: SessionConfig,
    ) -> Self {
        Self {
            user_backend,
            judge_backend,
            system,
            clock,
            config,
            retry_policy: RetryPolicy::default(),
        }
    }

    /// Retry one step until it succeeds or the consecutive-failure cap is
    /// exceeded. The counter is shared across steps and reset by any
    /// success, so only an unbroken run of failures aborts the session.
    fn run_step<T>(
        &self,
        failures: &mut u32,
        mut step: impl FnMut() -> Result<T, String>,
    ) -> Step<T> {
        loop {
            match step() {
                Ok(value) => {
                    *failures = 0;
                    return Step::Done(value);
                }
                Err(detail) => {
                    *failures += 1;
                    tracing::warn!(consecutive = *failures, %detail, "dialogue step failed");
                    if *failures > self.config.error_cap {
                        return Step::Abort(detail);
                    }
                }
            }
        }
    }

    pub fn run(&self, persona: &Persona) -> DialogueSession {
        let session_id = format!("sess_{}", persona.id);
        let started_at = self.clock.now();
        let max_turns = self.config.max_turns as usize;
        let mut turns: Vec<Turn> = Vec::new();
        let mut verdicts: Vec<GoalVerdict> = Vec::new();
        let mut failures = 0u32;

        macro_rules! step {
            ($body:expr) => {
                match self.run_step(&mut failures, || $body) {
                    Step::Done(value) => value,
                    Step::Abort(reason) => break SessionOutcome::Aborted { reason },
                }
            };
        }

        let outcome = loop {
            if turns.len() >= max_turns {
                break SessionOutcome::TurnCapReached;
            }

            let pending_buttons = turns
                .last()
                .filter(|t| t.speaker == Speaker::System && !t.buttons.is_empty())
                .map(|t| t.buttons.clone());
            let user_turn = step!(next_user_turn(
                self.user_backend,
                persona,
                &turns,
                pending_buttons.as_deref(),
                &self.retry_policy
            )
            .map_err(|e| e.to_string()));
            turns.push(user_turn.at(self.clock.now()));

            if turns.len() >= max_turns {
                // The cap lands on a user turn; judge it before deciding
                // so a success at exactly the cap still counts.
                let verdict =
                    step!(
                        judge_goals(self.judge_backend, persona, &turns, &self.retry_policy)
                            .map_err(|e| e.to_string())
                    );
                let met = verdict.all_met();
                verdicts.push(verdict);
                break if met {
                    SessionOutcome::Success
                } else {
                    SessionOutcome::TurnCapReached
                };
            }

            let reply = step!(self
                .system
                .respond(&session_id, &turns)
                .map_err(|e| e.to_string()));
            turns.push(
                Turn::system(turns.len() + 1, reply.utterance, reply.buttons).at(self.clock.now()),
            );

            if self.config.judge_every_user_turn || turns.len() >= max_turns {
                let verdict =
                    step!(
                        judge_goals(self.judge_backend, persona, &turns, &self.retry_policy)
                            .map_err(|e| e.to_string())
                    );
                let met = verdict.all_met();
                verdicts.push(verdict);
                if met {
                    break SessionOutcome::Success;
                }
            }
        };

        DialogueSession {
            session_id,
            persona_id: persona.id.clone(),
            config: self.config.clone(),
            turns,
            verdicts,
            outcome,
            started_at,
            finished_at: self.clock.now(),
        }
    }
}

/// One line of the transcript JSONL: a session header followed by its
/// turn and verdict lines in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TranscriptLine {
    Session {
        session_id: String,
        persona_id: String,
        config: SessionConfig,
        outcome: SessionOutcome,
        user_turn_count: usize,
        total_turn_count: usize,
        started_at: DateTime<Utc>,
        finished_at: DateTime<Utc>,
    },
    Turn(Turn),
    Verdict(GoalVerdict),
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("transcript line {line}: {detail}")]
    Malformed { line: usize, detail: String },
}

/// Write sessions as JSONL, atomically (temp file then rename).
pub fn write_transcripts(
    path: &std::path::Path,
    sessions: &[DialogueSession],
) -> Result<(), JsonlError> {
    let mut lines: Vec<TranscriptLine> = Vec::new();
    for s in sessions {
        lines.push(TranscriptLine::Session {
            session_id: s.session_id.clone(),
            persona_id: s.persona_id.clone(),
            config: s.config.clone(),
            outcome: s.outcome.clone(),
            user_turn_count: s.user_turn_count(),
            total_turn_count: s.total_turn_count(),
            started_at: s.started_at,
            finished_at: s.finished_at,
        });
        let mut verdicts = s.verdicts.iter().peekable();
        for turn in &s.turns {
            lines.push(TranscriptLine::Turn(turn.clone()));
            while verdicts
                .peek()
                .is_some_and(|v| v.judged_at_turn <= turn.index)
            {
                lines.push(TranscriptLine::Verdict(verdicts.next().unwrap().clone()));
            }
        }
        for verdict in verdicts {
            lines.push(TranscriptLine::Verdict(verdict.clone()));
        }
    }
    write_jsonl(path, &lines)
}

/// Read sessions back from transcript JSONL. Turn and verdict lines
/// attach to the most recent session header; counts in the header must
/// match the lines that follow it.
pub fn read_transcripts(path: &std::path::Path) -> Result<Vec<DialogueSession>, TranscriptError> {
    let lines: Vec<TranscriptLine> = read_jsonl(path)?;
    let mut sessions: Vec<DialogueSession> = Vec::new();
    let mut expected: Vec<(usize, usize)> = Vec::new();
    for (i, line) in lines.into_iter().enumerate() {
        let line_no = i + 1;
        match line {
            TranscriptLine::Session {
                session_id,
                persona_id,
                config,
                outcome,
                user_turn_count,
                total_turn_count,
                started_at,
                finished_at,
            } => {
                sessions.push(DialogueSession {
                    session_id,
                    persona_id,
                    config,
                    turns: Vec::new(),
                    verdicts: Vec::new(),
                    outcome,
                    started_at,
                    finished_at,
                });
                expected.push((user_turn_count, total_turn_count));
            }
            TranscriptLine::Turn(turn) => match sessions.last_mut() {
                Some(s) => s.turns.push(turn),
                None => {
                    return Err(TranscriptError::Malformed {
                        line: line_no,
                        detail: "turn line before any session header".to_string(),
                    })
                }
            },
            TranscriptLine::Verdict(verdict) => match sessions.last_mut() {
                Some(s) => s.verdicts.push(verdict),
                None => {
                    return Err(TranscriptError::Malformed {
                        line: line_no,
                        detail: "verdict line before any session header".to_string(),
                    })
                }
            },
        }
    }
    for (s, (user_count, total_count)) in sessions.iter().zip(&expected) {
        if s.user_turn_count() != *user_count || s.total_turn_count() != *total_count {
            return Err(TranscriptError::Malformed {
                line: 0,
                detail: format!(
                    "session {} header claims {}/{} turns but {}/{} were read",
                    s.session_id,
                    user_count,
                    total_count,
                    s.user_turn_count(),
                    s.total_turn_count()
                ),
            });
        }
    }
    Ok(sessions)
}

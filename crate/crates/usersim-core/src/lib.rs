//! Synthetic user simulation for task-oriented dialogue systems.
//!
//! The crate covers the full pipeline:
//!
//! * [`persona`] — user profile schema, parsing and validation of
//!   LLM-produced profiles
//! * [`gateway`] — chat-completion backends (OpenAI-compatible HTTP and a
//!   deterministic scripted backend for tests/replays)
//! * [`generator`] — diversity-steered persona generation: every prompt
//!   embeds the value counts of all previously generated users
//! * [`dialogue`] — the simulated conversation loop with continuous
//!   goal judging and a 20-turn cap
//! * [`studybot`] — a miniature study-program advisor bot used as the
//!   simulation target
//! * [`analytics`] — distributions, cross-tabs, diversity metrics and
//!   session statistics over persona/session files

pub mod analytics;
pub mod clock;
pub mod dialogue;
pub mod gateway;
pub mod generator;
pub mod jsonl;
pub mod persona;
pub mod report;
pub mod studybot;

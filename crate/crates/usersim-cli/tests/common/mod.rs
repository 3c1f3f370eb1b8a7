//! Deterministic builder for the committed fixtures under `fixtures/`.
//!
//! Everything here is pure arithmetic over fixed plans: generation
//! scripts (the replies a scripted "LLM" gives), engineered persona
//! sets, and per-session dialogue scripts. The `fixtures` guard test
//! renders all of it through the real CLI commands and compares the
//! bytes against the committed files, so the fixtures can never drift
//! from the code that produces them. Run with `REGEN_FIXTURES=1` to
//! rewrite the committed files after an intentional change.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use usersim_core::analytics::attribute_distribution;
use usersim_core::clock::{Clock, FixedClock};
use usersim_core::jsonl::read_jsonl;
use usersim_core::persona::{judged_goals, Persona, Personality, UserGoals, DEFAULT_PRIMARY_GOAL};

/// Directory holding the committed fixture files.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn count_words(s: &str) -> usize {
    s.split_whitespace().count()
}

/// One JSONL line per reply (a bare JSON string).
fn script_bytes(replies: &[String]) -> Vec<u8> {
    let mut out = String::new();
    for r in replies {
        out.push_str(&serde_json::to_string(r).expect("reply serializes"));
        out.push('\n');
    }
    out.into_bytes()
}

fn jsonl_bytes<T: serde::Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        out.extend_from_slice(
            serde_json::to_string(item)
                .expect("item serializes")
                .as_bytes(),
        );
        out.push(b'\n');
    }
    out
}

fn pretty_json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("config serializes");
    bytes.push(b'\n');
    bytes
}

// ---------------------------------------------------------------------------
// Generation scripts (persona replies for the scripted generator backend)
// ---------------------------------------------------------------------------

const REGIONS: [&str; 9] = [
    "asian",
    "non-german european",
    "south-american",
    "north-american",
    "african",
    "middle_east",
    "south-east asian",
    "australian",
    "german",
];

fn nationality_for(region: &str) -> &'static str {
    match region {
        "asian" => "Indian",
        "non-german european" => "French",
        "south-american" => "Brazilian",
        "north-american" => "Canadian",
        "african" => "Nigerian",
        "middle_east" => "Turkish",
        "south-east asian" => "Vietnamese",
        "australian" => "Australian",
        _ => "German",
    }
}

const INTEREST_POOL: [&str; 14] = [
    "Artificial Intelligence",
    "Robotics",
    "Renewable Energy",
    "Data Science",
    "Machine Learning",
    "Cybersecurity",
    "Urban Planning",
    "Sustainable Architecture",
    "Environmental Engineering",
    "Telecommunications",
    "Mechanical Design",
    "Software Engineering",
    "Climate Science",
    "Computer Vision",
];

const SECONDARY_POOL: [&str; 5] = [
    "module_contents",
    "acquired_skills",
    "admission_requirements",
    "admission_restriction",
    "structure_of_the_program",
];

const KNOWLEDGE_POOL: [&str; 3] = [
    "none",
    "browsed the university website once",
    "talked to a current student",
];

/// Deal `counts[j]` copies of `values[j]` into 100 slots, visiting the
/// slots in a fixed coprime stride so neighbouring personas differ.
fn deal<'a>(values: &[&'a str], counts: &[usize], stride: usize) -> Vec<&'a str> {
    let total: usize = counts.iter().sum();
    assert_eq!(total, 100, "deal() expects exactly 100 slots");
    assert!(
        stride % 2 == 1 && !stride.is_multiple_of(5),
        "stride must be coprime with 100"
    );
    let mut flat = Vec::with_capacity(total);
    for (value, &n) in values.iter().zip(counts) {
        flat.extend(std::iter::repeat_n(*value, n));
    }
    let mut out = vec![""; total];
    for (i, value) in flat.into_iter().enumerate() {
        out[(i * stride) % total] = value;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn persona_reply(
    age: i64,
    gender: &str,
    region: &str,
    degree: &str,
    language: &str,
    comm: &str,
    big5: [i64; 5],
    interests: &[&str],
    secondary: &[&str],
    knowledge: &str,
) -> String {
    serde_json::json!({
        "age": age,
        "gender": gender,
        "region": region,
        "nationality": nationality_for(region),
        "desired_degree": degree,
        "language_preference": language,
        "communication_type": comm,
        "personality": {
            "openness": big5[0],
            "conscientiousness": big5[1],
            "extraversion": big5[2],
            "agreeableness": big5[3],
            "neuroticism": big5[4],
        },
        "general_interests": interests,
        "user_goals": {
            "primary_goal": DEFAULT_PRIMARY_GOAL,
            "secondary_goals": secondary,
        },
        "initial_knowledge": knowledge,
    })
    .to_string()
}

/// 100 replies whose marginals are pinned: desired_degree
/// {Bachelor 33, Master 44, Exchange student 14, not sure 9} and gender
/// {female 45, male 45, diverse 10}; ages spread evenly over 18..=42.
pub fn o1_generation_replies() -> Vec<String> {
    let degrees = deal(
        &["Bachelor", "Master", "Exchange student", "not sure"],
        &[33, 44, 14, 9],
        37,
    );
    let genders = deal(&["female", "male", "diverse"], &[45, 45, 10], 29);
    let regions = deal(&REGIONS, &[12, 11, 11, 11, 11, 11, 11, 11, 11], 53);
    (0..100)
        .map(|i| {
            let interests: Vec<&str> = if i % 3 == 0 {
                vec![INTEREST_POOL[i % 14], INTEREST_POOL[(i + 5) % 14]]
            } else {
                vec![INTEREST_POOL[i % 14]]
            };
            let secondary: Vec<&str> = if i % 2 == 0 {
                vec![SECONDARY_POOL[i % 5], SECONDARY_POOL[(i + 2) % 5]]
            } else {
                vec![SECONDARY_POOL[i % 5]]
            };
            persona_reply(
                18 + (i as i64 % 25),
                genders[i],
                regions[i],
                degrees[i],
                if i % 5 == 0 { "german" } else { "english" },
                if i % 2 == 0 { "formal" } else { "informal" },
                [
                    1 + ((i as i64) % 5),
                    1 + ((i as i64 + 1) % 5),
                    1 + ((i as i64 + 2) % 5),
                    1 + ((i as i64 + 3) % 5),
                    1 + ((i as i64 + 4) % 5),
                ],
                &interests,
                &secondary,
                KNOWLEDGE_POOL[i % 3],
            )
        })
        .collect()
}

/// 100 replies with Master-only degrees, a 64/31/5 gender split and the
/// age mass on 22–24.
pub fn gpt4o_generation_replies() -> Vec<String> {
    let genders = deal(&["female", "male", "diverse"], &[64, 31, 5], 41);
    (0..100)
        .map(|i| {
            let age = if i % 20 == 19 {
                20 + (i as i64 % 7)
            } else {
                22 + (i as i64 % 3)
            };
            let interests = vec![INTEREST_POOL[(i * 3) % 14]];
            let secondary = vec![SECONDARY_POOL[(i * 2) % 5]];
            persona_reply(
                age,
                genders[i],
                REGIONS[(i * 7) % 9],
                "Master",
                "english",
                if i % 3 == 0 { "informal" } else { "formal" },
                [
                    1 + ((i as i64 + 2) % 5),
                    1 + ((i as i64 + 4) % 5),
                    1 + ((i as i64) % 5),
                    1 + ((i as i64 + 1) % 5),
                    1 + ((i as i64 + 3) % 5),
                ],
                &interests,
                &secondary,
                KNOWLEDGE_POOL[(i + 1) % 3],
            )
        })
        .collect()
}

pub fn generation_config(model_label: &str, batch_size: u32) -> serde_json::Value {
    serde_json::json!({
        "generation": {"batch_size": batch_size},
        "backends": {
            "generator": {
                "kind": "scripted",
                "script_path": "generation_script.jsonl",
                "model_label": model_label
            }
        },
        "output_dir": "out"
    })
}

// ---------------------------------------------------------------------------
// The 57-session campaign
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SessionKind {
    /// Ends successfully after this many user/system exchanges.
    Success { exchanges: usize },
    /// Runs into the 20-turn cap (10 exchanges, never judged successful).
    TurnCap,
    /// Four consecutive injected faults on the first user step.
    Aborted,
}

impl SessionKind {
    pub fn user_turns(self) -> usize {
        match self {
            SessionKind::Success { exchanges } => exchanges,
            SessionKind::TurnCap => 10,
            SessionKind::Aborted => 0,
        }
    }
}

pub struct CampaignPlan {
    pub personas: Vec<Persona>,
    pub kinds: Vec<SessionKind>,
    pub user_script: Vec<serde_json::Value>,
    pub judge_script: Vec<serde_json::Value>,
}

/// Session kinds in persona order: 25 ten-turn successes, 22
/// twelve-turn successes, 8 turn-cap sessions, 2 aborted sessions.
fn campaign_kinds() -> Vec<SessionKind> {
    let mut kinds = Vec::with_capacity(57);
    kinds.extend(std::iter::repeat_n(SessionKind::Success { exchanges: 5 }, 25));
    kinds.extend(std::iter::repeat_n(SessionKind::Success { exchanges: 6 }, 22));
    kinds.extend(std::iter::repeat_n(SessionKind::TurnCap, 8));
    kinds.extend(std::iter::repeat_n(SessionKind::Aborted, 2));
    kinds
}

/// Communication type per session, engineered so formal personas own
/// exactly 200 user turns and informal personas 137.
fn campaign_comm_type(index: usize) -> &'static str {
    let formal = match index {
        0..=15 => true,   // 16 of the 25 five-exchange successes
        16..=24 => false, // remaining 9
        25..=34 => true,  // 10 of the 22 six-exchange successes
        35..=46 => false, // remaining 12
        47..=52 => true,  // 6 of the 8 turn-cap sessions
        53..=54 => false, // remaining 2
        _ => false,       // both aborted sessions
    };
    if formal {
        "formal"
    } else {
        "informal"
    }
}

/// Secondary goals per session, engineered to the goal-outcome targets:
/// successes count module_contents 20, acquired_skills 16,
/// admission_requirements 15, structure_of_the_program 4,
/// admission_restriction 2; non-successes count admission_restriction 4,
/// module_contents 3, structure_of_the_program 3, acquired_skills 2,
/// admission_requirements 2.
fn campaign_secondary_goals(index: usize) -> Vec<String> {
    let goals: &[&str] = match index {
        0..=3 => &["module_contents", "admission_requirements"],
        4..=7 => &["module_contents", "structure_of_the_program"],
        8..=9 => &["module_contents", "admission_restriction"],
        10..=19 => &["module_contents"],
        20..=35 => &["acquired_skills"],
        36..=46 => &["admission_requirements"],
        47..=48 => &["admission_restriction", "acquired_skills"],
        49..=50 => &["admission_restriction", "admission_requirements"],
        51..=53 => &["module_contents"],
        _ => &["structure_of_the_program"],
    };
    goals.iter().map(|g| g.to_string()).collect()
}

/// One interest per session, engineered to the interest-outcome targets:
/// successes count renewable_energy 7, environmental_engineering 7,
/// telecommunications_engineering 6 (plus fillers at 5 or below);
/// non-successes count software_engineering 3, computer_science 3,
/// electrical_engineering 2, mathematics 1, physics 1.
fn campaign_interest(index: usize) -> &'static str {
    match index {
        0..=6 => "renewable_energy",
        7..=13 => "environmental_engineering",
        14..=19 => "telecommunications_engineering",
        20..=24 => "mathematics",
        25..=29 => "physics",
        30..=34 => "chemistry",
        35..=39 => "biology",
        40..=43 => "architecture",
        44..=46 => "urban_planning",
        47..=49 => "software_engineering",
        50..=52 => "computer_science",
        53..=54 => "electrical_engineering",
        55 => "mathematics",
        _ => "physics",
    }
}

fn campaign_personas(kinds: &[SessionKind]) -> Vec<Persona> {
    let clock = FixedClock::replay_default();
    kinds
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let region = REGIONS[i % 9];
            Persona {
                id: format!("sim_{:03}", i + 1),
                age: 19 + (i as i64 % 14),
                gender: if i % 7 == 3 {
                    "diverse".to_string()
                } else if i % 2 == 0 {
                    "female".to_string()
                } else {
                    "male".to_string()
                },
                region: region.to_string(),
                nationality: nationality_for(region).to_string(),
                desired_degree: "Master".to_string(),
                language_preference: "english".to_string(),
                communication_type: campaign_comm_type(i).to_string(),
                personality: Personality {
                    openness: 1 + ((i as i64) % 5),
                    conscientiousness: 1 + ((i as i64 + 2) % 5),
                    extraversion: 1 + ((i as i64 + 4) % 5),
                    agreeableness: 1 + ((i as i64 + 1) % 5),
                    neuroticism: 1 + ((i as i64 + 3) % 5),
                },
                general_interests: vec![campaign_interest(i).to_string()],
                user_goals: UserGoals {
                    primary_goal: DEFAULT_PRIMARY_GOAL.to_string(),
                    secondary_goals: campaign_secondary_goals(i),
                },
                initial_knowledge: KNOWLEDGE_POOL[i % 3].to_string(),
                created_at: clock.now(),
                generator_model: "gpt-o1".to_string(),
            }
        })
        .collect()
}

/// Catalog programs with two-word names, used to fill the question
/// templates without disturbing their word counts.
const TWO_WORD_PROGRAMS: [&str; 11] = [
    "Data Science",
    "Computer Science",
    "Software Engineering",
    "Urban Planning",
    "Environmental Engineering",
    "Electrical Engineering",
    "Mechanical Engineering",
    "Industrial Engineering",
    "Computer Engineering",
    "Sustainable Architecture",
    "Telecommunications Engineering",
];

/// Question templates; each has a 12-word and a 13-word variant once a
/// two-word program name is substituted for `{}`.
const QUESTION_TEMPLATES: [(&str, &str); 9] = [
    (
        "Could you tell me what modules the {} program includes please?",
        "Hello, could you tell me what modules the {} program includes please?",
    ),
    (
        "What exact skills will I learn in the {} master program?",
        "Also, what exact skills will I learn in the {} master program?",
    ),
    (
        "What are the admission requirements for the {} program this year?",
        "Hello, what are the admission requirements for the {} program this year?",
    ),
    (
        "Is there an admission restriction for the {} program right now?",
        "Also, is there an admission restriction for the {} program right now?",
    ),
    (
        "How is the {} program structured across the first few semesters?",
        "Okay, how is the {} program structured across the first few semesters?",
    ),
    (
        "How many ECTS points does the {} program award in total?",
        "Thanks, how many ECTS points does the {} program award in total?",
    ),
    (
        "When is the application deadline for the {} program next semester?",
        "Also, when is the application deadline for the {} program next semester?",
    ),
    (
        "What career prospects have graduates of the {} program typically had?",
        "Okay, what career prospects have graduates of the {} program typically had?",
    ),
    (
        "What is the language of instruction in the {} program please?",
        "Hello, what is the language of instruction in the {} program please?",
    ),
];

const OPENER_12: &str = "Hello, I would like to learn about the {} program please.";
const OPENER_13: &str = "Hello there, I would like to learn about the {} program please.";

const BUTTON_QUESTION: &str =
    "Good afternoon, could you tell me which Master programs I could study?";
const BUTTON_CHOICE: &str = "Renewable Energy Systems";

/// Substring planted in the prompt guard of fault entries; it never
/// occurs in a real prompt, so each such entry fails one user step.
const FAULT_GUARD: &str = "__FAULT_INJECTION__";

/// Hands out 13-word turns first, then 12-word turns, so each
/// communication-type group lands exactly on its engineered word total.
struct WordPlan {
    thirteens_left: usize,
}

impl WordPlan {
    fn next(&mut self) -> usize {
        if self.thirteens_left > 0 {
            self.thirteens_left -= 1;
            13
        } else {
            12
        }
    }
}

fn fill(template: &str, program: &str) -> String {
    template.replacen("{}", program, 1)
}

/// Build the campaign: personas, session kinds, and the user/judge
/// scripts that drive it. Word counts per communication type are
/// asserted on the way out.
pub fn campaign_plan() -> CampaignPlan {
    let kinds = campaign_kinds();
    let personas = campaign_personas(&kinds);

    // Formal free-text turns: 200 total minus the two fixed turns of the
    // button exchange; 2422 - 12 - 3 words remain, i.e. 31 thirteens.
    let mut formal = WordPlan { thirteens_left: 31 };
    let mut informal = WordPlan { thirteens_left: 97 };
    let mut words_by_comm: BTreeMap<&str, usize> = BTreeMap::new();
    let mut turns_by_comm: BTreeMap<&str, usize> = BTreeMap::new();

    let mut user_script: Vec<serde_json::Value> = Vec::new();
    let mut judge_script: Vec<serde_json::Value> = Vec::new();
    let mut topic = 0usize;
    let mut program = 0usize;

    for (i, (kind, persona)) in kinds.iter().zip(&personas).enumerate() {
        let comm = campaign_comm_type(i);
        let plan = if comm == "formal" {
            &mut formal
        } else {
            &mut informal
        };
        let mut utterance = |text: String| {
            *words_by_comm.entry(comm).or_default() += count_words(&text);
            *turns_by_comm.entry(comm).or_default() += 1;
            text
        };
        let goals = judged_goals(persona);
        let verdict_lines = |met: bool| {
            goals
                .iter()
                .map(|g| format!("{g}: {}", if met { "yes" } else { "no" }))
                .collect::<Vec<_>>()
                .join("\n")
        };

        match kind {
            SessionKind::Aborted => {
                for _ in 0..4 {
                    user_script.push(serde_json::json!({
                        "reply": "(never delivered)",
                        "expect_substring": FAULT_GUARD,
                    }));
                }
            }
            SessionKind::Success { exchanges } => {
                for turn in 0..*exchanges {
                    let target = plan.next();
                    let text = if turn == 0 {
                        let opener = if target == 13 { OPENER_13 } else { OPENER_12 };
                        fill(opener, TWO_WORD_PROGRAMS[i % 11])
                    } else {
                        let (twelve, thirteen) = QUESTION_TEMPLATES[topic % 9];
                        topic += 1;
                        program += 1;
                        let template = if target == 13 { thirteen } else { twelve };
                        fill(template, TWO_WORD_PROGRAMS[program % 11])
                    };
                    assert_eq!(count_words(&text), target, "bad word count: {text}");
                    let text = utterance(text);
                    if turn == 0 {
                        user_script.push(serde_json::json!({
                            "reply": text,
                            "expect_substring": "Open the conversation",
                        }));
                    } else {
                        user_script.push(serde_json::Value::String(text));
                    }
                    judge_script.push(serde_json::Value::String(verdict_lines(
                        turn + 1 == *exchanges,
                    )));
                }
            }
            SessionKind::TurnCap => {
                let button_session = i == 47; // the first turn-cap session
                for turn in 0..10 {
                    if button_session && turn == 0 {
                        let text = utterance(BUTTON_QUESTION.to_string());
                        assert_eq!(count_words(&text), 12);
                        user_script.push(serde_json::json!({
                            "reply": text,
                            "expect_substring": "Open the conversation",
                        }));
                    } else if button_session && turn == 1 {
                        let text = utterance(BUTTON_CHOICE.to_string());
                        user_script.push(serde_json::json!({
                            "reply": text,
                            "expect_substring": "Reply with exactly one of the following options",
                        }));
                    } else {
                        let target = plan.next();
                        let text = if turn == 0 {
                            let opener = if target == 13 { OPENER_13 } else { OPENER_12 };
                            fill(opener, TWO_WORD_PROGRAMS[i % 11])
                        } else {
                            let (twelve, thirteen) = QUESTION_TEMPLATES[topic % 9];
                            topic += 1;
                            program += 1;
                            let template = if target == 13 { thirteen } else { twelve };
                            fill(template, TWO_WORD_PROGRAMS[program % 11])
                        };
                        assert_eq!(count_words(&text), target, "bad word count: {text}");
                        let text = utterance(text);
                        if turn == 0 {
                            user_script.push(serde_json::json!({
                                "reply": text,
                                "expect_substring": "Open the conversation",
                            }));
                        } else {
                            user_script.push(serde_json::Value::String(text));
                        }
                    }
                    judge_script.push(serde_json::Value::String(verdict_lines(false)));
                }
            }
        }
    }

    assert_eq!(turns_by_comm["formal"], 200);
    assert_eq!(turns_by_comm["informal"], 137);
    assert_eq!(words_by_comm["formal"], 2422);
    assert_eq!(words_by_comm["informal"], 1741);
    assert_eq!(user_script.len(), 345);
    assert_eq!(judge_script.len(), 337);

    CampaignPlan {
        personas,
        kinds,
        user_script,
        judge_script,
    }
}

pub fn campaign_config() -> serde_json::Value {
    serde_json::json!({
        "backends": {
            "user": {"kind": "scripted", "script_path": "user_script.jsonl", "model_label": "gpt-4o"},
            "judge": {"kind": "scripted", "script_path": "judge_script.jsonl", "model_label": "gpt-4o"}
        },
        "output_dir": "out"
    })
}

// ---------------------------------------------------------------------------
// The 20-persona end-to-end pipeline fixture
// ---------------------------------------------------------------------------

pub fn pipeline_generation_replies() -> Vec<String> {
    (0..20)
        .map(|i| {
            persona_reply(
                20 + (i as i64 % 10),
                ["female", "male", "diverse"][i % 3],
                REGIONS[i % 9],
                ["Bachelor", "Master"][i % 2],
                "english",
                ["formal", "informal"][i % 2],
                [
                    1 + ((i as i64) % 5),
                    1 + ((i as i64 + 1) % 5),
                    1 + ((i as i64 + 2) % 5),
                    1 + ((i as i64 + 3) % 5),
                    1 + ((i as i64 + 4) % 5),
                ],
                &[INTEREST_POOL[i % 14]],
                &[SECONDARY_POOL[i % 5]],
                KNOWLEDGE_POOL[i % 3],
            )
        })
        .collect()
}

/// One opening question per session; every session succeeds after a
/// single exchange.
pub fn pipeline_user_script() -> Vec<serde_json::Value> {
    (0..20)
        .map(|i| {
            let program = TWO_WORD_PROGRAMS[i % 11];
            serde_json::json!({
                "reply": fill(OPENER_12, program),
                "expect_substring": "Open the conversation",
            })
        })
        .collect()
}

pub fn pipeline_judge_script() -> Vec<serde_json::Value> {
    (0..20)
        .map(|i| {
            let secondary = SECONDARY_POOL[i % 5];
            serde_json::Value::String(format!("{DEFAULT_PRIMARY_GOAL}: yes\n{secondary}: yes"))
        })
        .collect()
}

pub fn pipeline_config() -> serde_json::Value {
    serde_json::json!({
        "generation": {"batch_size": 20},
        "backends": {
            "generator": {"kind": "scripted", "script_path": "generation_script.jsonl", "model_label": "gpt-o1"},
            "user": {"kind": "scripted", "script_path": "user_script.jsonl", "model_label": "gpt-4o"},
            "judge": {"kind": "scripted", "script_path": "judge_script.jsonl", "model_label": "gpt-4o"}
        },
        "output_dir": "out"
    })
}

// ---------------------------------------------------------------------------
// Rendering: run the real CLI over the composed inputs
// ---------------------------------------------------------------------------

fn values_jsonl(values: &[serde_json::Value]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        out.extend_from_slice(
            serde_json::to_string(v)
                .expect("value serializes")
                .as_bytes(),
        );
        out.push(b'\n');
    }
    out
}

fn write(path: &Path, bytes: &[u8]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

/// Render every committed fixture file into memory, running the real
/// `generate`/`simulate` commands inside `work`. Returns paths relative
/// to [`fixtures_dir`] with their expected bytes.
pub fn render_all_fixtures(work: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut rendered: Vec<(PathBuf, Vec<u8>)> = Vec::new();

    // --- generation fixtures ---------------------------------------------
    for (name, replies, expected_degrees) in [
        (
            "gpt_o1",
            o1_generation_replies(),
            vec![
                ("Bachelor", 33u64),
                ("Exchange student", 14),
                ("Master", 44),
                ("not sure", 9),
            ],
        ),
        ("gpt_4o", gpt4o_generation_replies(), vec![("Master", 100)]),
    ] {
        let model = name.replace('_', "-");
        let config = pretty_json_bytes(&generation_config(&model, 100));
        let script = script_bytes(&replies);
        let dir = work.join(name);
        write(&dir.join("config.json"), &config);
        write(&dir.join("generation_script.jsonl"), &script);

        let out = work.join(format!("{name}_out"));
        usersim_cli::cmd_generate(&dir.join("config.json"), Some(&out))
            .unwrap_or_else(|e| panic!("{name} generation failed: {e}"));
        let personas: Vec<Persona> = read_jsonl(&out.join("personas.jsonl")).unwrap();
        assert_eq!(personas.len(), 100);

        let degrees = attribute_distribution(&personas, "desired_degree").unwrap();
        let got: Vec<(String, u64)> = degrees
            .counts
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let want: Vec<(String, u64)> = expected_degrees
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        assert_eq!(got, want, "{name} degree marginals drifted");
        if name == "gpt_o1" {
            let genders = attribute_distribution(&personas, "gender").unwrap();
            assert_eq!(genders.counts["female"], 45);
            assert_eq!(genders.counts["male"], 45);
            assert_eq!(genders.counts["diverse"], 10);
        }

        rendered.push((PathBuf::from(name).join("config.json"), config));
        rendered.push((PathBuf::from(name).join("generation_script.jsonl"), script));
        rendered.push((
            PathBuf::from(name).join("personas.jsonl"),
            std::fs::read(out.join("personas.jsonl")).unwrap(),
        ));
    }

    // --- the 57-session campaign ------------------------------------------
    let plan = campaign_plan();
    let config = pretty_json_bytes(&campaign_config());
    let personas = jsonl_bytes(&plan.personas);
    let user_script = values_jsonl(&plan.user_script);
    let judge_script = values_jsonl(&plan.judge_script);
    let dir = work.join("campaign57");
    write(&dir.join("config.json"), &config);
    write(&dir.join("personas.jsonl"), &personas);
    write(&dir.join("user_script.jsonl"), &user_script);
    write(&dir.join("judge_script.jsonl"), &judge_script);

    let out = work.join("campaign57_out");
    usersim_cli::cmd_simulate(
        &dir.join("config.json"),
        &dir.join("personas.jsonl"),
        Some(&out),
    )
    .unwrap_or_else(|e| panic!("campaign simulation failed: {e}"));
    let sessions = usersim_core::dialogue::read_transcripts(&out.join("sessions.jsonl")).unwrap();
    assert_eq!(sessions.len(), 57);
    let successes = sessions.iter().filter(|s| s.outcome.is_success()).count();
    assert_eq!(successes, 47, "campaign success count drifted");
    for (session, kind) in sessions.iter().zip(&plan.kinds) {
        match kind {
            SessionKind::Success { exchanges } => {
                assert!(session.outcome.is_success());
                assert_eq!(session.total_turn_count(), exchanges * 2);
            }
            SessionKind::TurnCap => {
                assert_eq!(session.outcome.label(), "turn_cap_reached");
                assert_eq!(session.total_turn_count(), 20);
            }
            SessionKind::Aborted => {
                assert_eq!(session.outcome.label(), "aborted");
                assert_eq!(session.total_turn_count(), 0);
            }
        }
    }

    rendered.push((PathBuf::from("campaign57/config.json"), config));
    rendered.push((PathBuf::from("campaign57/personas.jsonl"), personas));
    rendered.push((PathBuf::from("campaign57/user_script.jsonl"), user_script));
    rendered.push((PathBuf::from("campaign57/judge_script.jsonl"), judge_script));
    rendered.push((
        PathBuf::from("campaign57/sessions.jsonl"),
        std::fs::read(out.join("sessions.jsonl")).unwrap(),
    ));

    // --- the end-to-end pipeline fixture -----------------------------------
    let config = pretty_json_bytes(&pipeline_config());
    let gen_script = script_bytes(&pipeline_generation_replies());
    let user_script = values_jsonl(&pipeline_user_script());
    let judge_script = values_jsonl(&pipeline_judge_script());
    let dir = work.join("pipeline20");
    write(&dir.join("config.json"), &config);
    write(&dir.join("generation_script.jsonl"), &gen_script);
    write(&dir.join("user_script.jsonl"), &user_script);
    write(&dir.join("judge_script.jsonl"), &judge_script);

    let gen_out = work.join("pipeline20_gen");
    usersim_cli::cmd_generate(&dir.join("config.json"), Some(&gen_out))
        .unwrap_or_else(|e| panic!("pipeline generation failed: {e}"));
    let sim_out = work.join("pipeline20_sim");
    usersim_cli::cmd_simulate(
        &dir.join("config.json"),
        &gen_out.join("personas.jsonl"),
        Some(&sim_out),
    )
    .unwrap_or_else(|e| panic!("pipeline simulation failed: {e}"));
    let sessions =
        usersim_core::dialogue::read_transcripts(&sim_out.join("sessions.jsonl")).unwrap();
    assert_eq!(sessions.len(), 20);
    assert!(sessions.iter().all(|s| s.outcome.is_success()));

    rendered.push((PathBuf::from("pipeline20/config.json"), config));
    rendered.push((
        PathBuf::from("pipeline20/generation_script.jsonl"),
        gen_script,
    ));
    rendered.push((PathBuf::from("pipeline20/user_script.jsonl"), user_script));
    rendered.push((PathBuf::from("pipeline20/judge_script.jsonl"), judge_script));

    rendered
}

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::VocabEntry;
use crate::narrative::{Category, Citation, ElementKind, QuizSpec, SceneSpec};
use crate::providers::{ImageRef, UsageLedger};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Intro,
    Fieldwork,
    Loading,
    Review,
    Defense,
    Complete,
}

impl Phase {
    /// Position on the main track; `Loading` sits level with `Fieldwork`.
    pub fn rank(self) -> u8 {
        match self {
            Phase::Intro => 0,
            Phase::Fieldwork | Phase::Loading => 1,
            Phase::Review => 2,
            Phase::Defense => 3,
            Phase::Complete => 4,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theme {
    #[default]
    Yellow,
    Green,
    Blue,
    Red,
}

impl std::str::FromStr for Theme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "yellow" => Ok(Theme::Yellow),
            "green" => Ok(Theme::Green),
            "blue" => Ok(Theme::Blue),
            "red" => Ok(Theme::Red),
            other => Err(format!("unknown theme {other:?} (expected yellow, green, blue or red)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifeline {
    Hint,
    FiftyFifty,
}

impl fmt::Display for Lifeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lifeline::Hint => "hint",
            Lifeline::FiftyFifty => "fifty-fifty",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Index(u8),
    Custom(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub day: u32,
    pub scene: SceneSpec,
    pub image: ImageRef,
    pub image_prompt: String,
    /// Close-up images of artifacts first seen this day.
    pub artifact_images: BTreeMap<String, ImageRef>,
    pub loading_quote: String,
    pub vocab_spawned: Vec<VocabEntry>,
    pub chosen: Option<Choice>,
    pub retrieved_chunk_ids: Vec<usize>,
}

impl TurnRecord {
    /// Text of the chosen option, if any.
    pub fn chosen_text(&self) -> Option<&str> {
        match self.chosen.as_ref()? {
            Choice::Index(i) => self.scene.choices.get(usize::from(*i)).map(String::as_str),
            Choice::Custom(s) => Some(s),
        }
    }
}

/// Loading-screen state between retrieval and scene generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingTurn {
    pub day: u32,
    pub query: String,
    pub loading_quote: String,
    pub vocab_spawned: Vec<VocabEntry>,
    pub retrieved_chunk_ids: Vec<usize>,
    pub return_phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectedElement {
    pub name: String,
    pub kind: ElementKind,
    pub day_collected: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectedVocab {
    pub term: String,
    pub gloss: String,
    pub day_collected: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizRuntime {
    pub spec: QuizSpec,
    pub quote_passage: String,
    pub theory_concept: String,
    pub answers: BTreeMap<u32, u8>,
    pub hints_used: u32,
    pub hints: BTreeMap<u32, Vec<String>>,
    pub fifty_fifty_used: u32,
    /// Question id → the two removed option indices.
    pub eliminated: BTreeMap<u32, [u8; 2]>,
    pub score: u32,
}

impl QuizRuntime {
    pub fn new(spec: QuizSpec, quote_passage: String, theory_concept: String) -> Self {
        Self {
            spec,
            quote_passage,
            theory_concept,
            answers: BTreeMap::new(),
            hints_used: 0,
            hints: BTreeMap::new(),
            fifty_fifty_used: 0,
            eliminated: BTreeMap::new(),
            score: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.answers.len() == self.spec.questions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scoreboard {
    pub score: u32,
    pub per_category: BTreeMap<Category, u32>,
    pub artifacts: usize,
    pub vocab: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AskKind {
    Term,
    Book,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskRecord {
    pub kind: AskKind,
    pub day: u32,
    pub question: String,
    pub answer: String,
    pub chunk_ids: Vec<usize>,
    pub citations: Vec<Citation>,
}

/// All state of one playthrough. Mutate it only through [`super::Engine`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSession {
    pub id: String,
    pub seed: u64,
    /// Number of random draws taken so far; see [`super::rng`].
    pub rng_draws: u64,
    pub phase: Phase,
    /// Current day. Equals the number of turns while a turn is open.
    pub day: u32,
    pub theme: Theme,
    pub intro: String,
    pub turns: Vec<TurnRecord>,
    pub pending: Option<PendingTurn>,
    pub inventory: Vec<CollectedElement>,
    pub vocab_collected: Vec<CollectedVocab>,
    pub quiz: Option<QuizRuntime>,
    pub scoreboard: Option<Scoreboard>,
    pub asks: Vec<AskRecord>,
    pub ledger: UsageLedger,
}

impl GameSession {
    pub fn current_turn(&self) -> Option<&TurnRecord> {
        self.turns.last()
    }

    /// True while the latest turn still waits for the player's choice.
    pub fn turn_open(&self) -> bool {
        self.turns.last().is_some_and(|t| t.chosen.is_none())
    }

    pub fn completed_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.chosen.is_some()).count()
    }

    pub fn distinct_artifacts(&self) -> usize {
        self.inventory.iter().filter(|e| e.kind == ElementKind::Artifact).count()
    }

    pub fn has_element(&self, kind: ElementKind, name: &str) -> bool {
        self.inventory.iter().any(|e| e.kind == kind && e.name.eq_ignore_ascii_case(name))
    }

    pub fn has_vocab(&self, term: &str) -> Option<&CollectedVocab> {
        self.vocab_collected.iter().find(|v| v.term.eq_ignore_ascii_case(term))
    }

    pub fn transcript(&self) -> Transcript {
        Transcript { schema_version: TRANSCRIPT_SCHEMA_VERSION, session: self.clone() }
    }

    /// Pretty JSON transcript with a trailing newline, stable byte for byte.
    pub fn transcript_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.transcript()).expect("session serializes");
        s.push('\n');
        s
    }
}

/// Versioned export of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub session: GameSession,
}

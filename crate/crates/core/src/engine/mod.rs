//! The game state machine.
//!
//! [`GameSession`] is plain serializable data; [`Engine`] owns the corpus
//! index, provider gateway and templates and performs every state change.
//! Under the mock backend a playthrough is a pure function of the seed, the
//! scripts and the player inputs.

mod config;
mod images;
mod ops;
mod rng;
mod session;

pub use config::{EngineConfig, DEFAULT_INTRO, OPENING_QUERY};
pub use images::ImageCache;
pub use ops::{AnswerOutcome, AskAnswer, CollectOutcome, Engine, TurnStart};
pub use rng::splitmix64;
pub use session::{
    AskKind, AskRecord, Choice, CollectedElement, CollectedVocab, GameSession, Lifeline, PendingTurn, Phase, QuizRuntime,
    Scoreboard, Theme, Transcript, TurnRecord, TRANSCRIPT_SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("no corpus index is loaded")]
    NotReady,
    #[error("{op} is not allowed in phase {phase}")]
    InvalidPhase { op: String, phase: Phase },
    #[error("the current turn is waiting for a choice")]
    ChoicePending,
    #[error("there is no open turn")]
    NoOpenTurn,
    #[error("turn failed: {cause}")]
    TurnFailed { cause: String },
    #[error("invalid choice: {0}")]
    InvalidChoice(String),
    #[error("That action is not possible in this story. Please choose another path.")]
    ChoiceRejected { reason: String },
    #[error("{0:?} is not available to collect right now")]
    NotInScene(String),
    #[error("day {0} is not part of this itinerary")]
    InvalidDay(u32),
    #[error("no question {0}")]
    UnknownQuestion(u32),
    #[error("question {0} was already answered")]
    AlreadyAnswered(u32),
    #[error("option {option} of question {qid} was eliminated")]
    OptionEliminated { qid: u32, option: u8 },
    #[error("no {0} lifelines left")]
    LifelineExhausted(Lifeline),
    #[error("could not prepare the defense: {cause}")]
    DefenseFailed { cause: String },
    #[error("{answered} of 10 questions answered")]
    DefenseIncomplete { answered: usize },
    #[error("That question cannot be answered here. Please rephrase it.")]
    QuestionRejected { reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("manual phase advancement is disabled")]
    ManualAdvanceDisabled,
    #[error("provider unavailable: {0}")]
    Unavailable(String),
}

impl EngineError {
    /// Stable machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            EngineError::NotReady => "not_ready",
            EngineError::InvalidPhase { .. } => "invalid_phase",
            EngineError::ChoicePending => "choice_pending",
            EngineError::NoOpenTurn => "no_open_turn",
            EngineError::TurnFailed { .. } => "turn_failed",
            EngineError::InvalidChoice(_) => "invalid_choice",
            EngineError::ChoiceRejected { .. } => "choice_rejected",
            EngineError::NotInScene(_) => "not_in_scene",
            EngineError::InvalidDay(_) => "invalid_day",
            EngineError::UnknownQuestion(_) => "unknown_question",
            EngineError::AlreadyAnswered(_) => "already_answered",
            EngineError::OptionEliminated { .. } => "option_eliminated",
            EngineError::LifelineExhausted(_) => "lifeline_exhausted",
            EngineError::DefenseFailed { .. } => "defense_failed",
            EngineError::DefenseIncomplete { .. } => "defense_incomplete",
            EngineError::QuestionRejected { .. } => "question_rejected",
            EngineError::InvalidInput(_) => "invalid_input",
            EngineError::ManualAdvanceDisabled => "manual_advance_disabled",
            EngineError::Unavailable(_) => "unavailable",
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests;

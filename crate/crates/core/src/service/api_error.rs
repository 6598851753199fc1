use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use super::store::StoreError;
use crate::engine::EngineError;

/// Every code an API response can carry. Engine codes mirror
/// [`EngineError::name`]; the rest belong to the HTTP layer.
pub const API_ERROR_CODES: &[&str] = &[
    "not_ready",
    "invalid_phase",
    "choice_pending",
    "no_open_turn",
    "turn_failed",
    "invalid_choice",
    "choice_rejected",
    "not_in_scene",
    "invalid_day",
    "unknown_question",
    "already_answered",
    "option_eliminated",
    "lifeline_exhausted",
    "defense_failed",
    "defense_incomplete",
    "question_rejected",
    "invalid_input",
    "manual_advance_disabled",
    "unavailable",
    "bad_request",
    "not_found",
    "session_exists",
    "schema_mismatch",
    "internal",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub retryable: bool,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>, retryable: bool) -> Self {
        debug_assert!(API_ERROR_CODES.contains(&code), "unpublished code {code}");
        Self { code: code.to_string(), message: message.into(), retryable, status: status.as_u16() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message, false)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message, false)
    }

    pub fn session_exists(id: &str) -> Self {
        Self::new(StatusCode::CONFLICT, "session_exists", format!("session {id:?} already exists"), false)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, true)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        use StatusCode as S;
        // exhaustive on purpose: a new engine error does not compile until
        // it has a status here
        let (status, retryable) = match &e {
            EngineError::NotReady => (S::SERVICE_UNAVAILABLE, true),
            EngineError::InvalidPhase { .. } => (S::CONFLICT, false),
            EngineError::ChoicePending => (S::CONFLICT, false),
            EngineError::NoOpenTurn => (S::CONFLICT, false),
            EngineError::TurnFailed { .. } => (S::BAD_GATEWAY, true),
            EngineError::InvalidChoice(_) => (S::UNPROCESSABLE_ENTITY, false),
            EngineError::ChoiceRejected { .. } => (S::UNPROCESSABLE_ENTITY, false),
            EngineError::NotInScene(_) => (S::UNPROCESSABLE_ENTITY, false),
            EngineError::InvalidDay(_) => (S::NOT_FOUND, false),
            EngineError::UnknownQuestion(_) => (S::NOT_FOUND, false),
            EngineError::AlreadyAnswered(_) => (S::CONFLICT, false),
            EngineError::OptionEliminated { .. } => (S::UNPROCESSABLE_ENTITY, false),
            EngineError::LifelineExhausted(_) => (S::CONFLICT, false),
            EngineError::DefenseFailed { .. } => (S::BAD_GATEWAY, true),
            EngineError::DefenseIncomplete { .. } => (S::CONFLICT, false),
            EngineError::QuestionRejected { .. } => (S::UNPROCESSABLE_ENTITY, false),
            EngineError::InvalidInput(_) => (S::UNPROCESSABLE_ENTITY, false),
            EngineError::ManualAdvanceDisabled => (S::FORBIDDEN, false),
            EngineError::Unavailable(_) => (S::SERVICE_UNAVAILABLE, true),
        };
        Self::new(status, e.name(), e.to_string(), retryable)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) | StoreError::InvalidId(_) => Self::not_found(e.to_string()),
            StoreError::SchemaMismatch { .. } => Self::new(StatusCode::CONFLICT, "schema_mismatch", e.to_string(), false),
            StoreError::Corrupt { .. } | StoreError::Io(_) => {
                tracing::error!(%e, "session store failure");
                Self::internal(e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Lifeline, Phase};

    fn every_engine_error() -> Vec<EngineError> {
        vec![
            EngineError::NotReady,
            EngineError::InvalidPhase { op: "x".into(), phase: Phase::Intro },
            EngineError::ChoicePending,
            EngineError::NoOpenTurn,
            EngineError::TurnFailed { cause: "x".into() },
            EngineError::InvalidChoice("x".into()),
            EngineError::ChoiceRejected { reason: "x".into() },
            EngineError::NotInScene("x".into()),
            EngineError::InvalidDay(9),
            EngineError::UnknownQuestion(11),
            EngineError::AlreadyAnswered(1),
            EngineError::OptionEliminated { qid: 1, option: 0 },
            EngineError::LifelineExhausted(Lifeline::Hint),
            EngineError::DefenseFailed { cause: "x".into() },
            EngineError::DefenseIncomplete { answered: 3 },
            EngineError::QuestionRejected { reason: "x".into() },
            EngineError::InvalidInput("x".into()),
            EngineError::ManualAdvanceDisabled,
            EngineError::Unavailable("x".into()),
        ]
    }

    #[test]
    fn engine_errors_map_to_distinct_published_codes() {
        let errors = every_engine_error();
        let mut codes: Vec<String> = errors.into_iter().map(|e| ApiError::from(e).code).collect();
        assert!(codes.iter().all(|c| API_ERROR_CODES.contains(&c.as_str())));
        let n = codes.len();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), n, "two engine errors share a code");
    }

    #[test]
    fn retryable_only_for_transient_failures() {
        let retryable: Vec<String> =
            every_engine_error().into_iter().map(ApiError::from).filter(|e| e.retryable).map(|e| e.code).collect();
        assert_eq!(retryable, ["not_ready", "turn_failed", "defense_failed", "unavailable"]);
    }

    #[test]
    fn store_errors() {
        let e = ApiError::from(StoreError::SchemaMismatch { found: 0, expected: 1 });
        assert_eq!((e.code.as_str(), e.status()), ("schema_mismatch", StatusCode::CONFLICT));
        assert_eq!(ApiError::from(StoreError::NotFound("a".into())).status(), StatusCode::NOT_FOUND);
    }
}

//! Session persistence, the REST API, configuration and headless play.

mod actions;
mod api_error;
mod config;
mod play;
mod runtime;
mod server;
mod store;
mod view;

pub use actions::{apply, parse_option_letter, Action};
pub use api_error::{ApiError, API_ERROR_CODES};
pub use config::{BackendKind, CorpusConfig, EmbedderKind, EngineSection, ProviderConfig, ServerConfig, ServiceConfig};
pub use play::{play, PlayError, PlayReport, Script, StepRecord};
pub use runtime::{build_engine, components, engine_from, index_config, ingest, load_or_build_index, Components};
pub use server::{router, serve, AppState};
pub use store::{valid_session_id, write_atomic, SessionStore, StoreError, StoredSession};
pub use view::{image_url, DaySummary, DayView, LoadingView, QuestionView, QuizView, SessionView};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Provider(#[from] crate::providers::ProviderError),
    #[error(transparent)]
    Narrative(#[from] crate::narrative::NarrativeError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

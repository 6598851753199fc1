//! Prompt templates and the parsers that turn model text into game objects.
//!
//! Everything here is a pure function of its inputs. Templates live in
//! `assets/templates/*.tmpl` and are compiled in; an override directory can
//! replace any of them at runtime.

mod answers;
mod image_prompt;
mod quiz;
mod scene;
mod template;

pub use answers::{extract_quotes, ground_quotes, sanitize_hint, Citation};
pub use image_prompt::{distill_image_prompt, fit_excerpt, ImagePromptInput, EXCERPT_MAX_WORDS, EXCERPT_MIN_WORDS};
pub use quiz::{
    letter_for, parse_quiz, required_count, validate_quiz_composition, Category, CompositionError, QuizQuestion, QuizSpec,
    QUIZ_LENGTH, REQUIRED_COMPOSITION,
};
pub use scene::{parse_scene, CulturalElementSpec, ElementKind, SceneSpec};
pub use template::{format_passages, render_template, Bindings, Template, TemplateSet, REQUIRED_TEMPLATES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NarrativeError {
    #[error("template error: {0}")]
    Template(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} has no binding for placeholder {{{{{placeholder}}}}}")]
    UnboundPlaceholder { template: String, placeholder: String },
    #[error("scene parse error: {0}")]
    SceneParse(String),
    #[error("narrative excerpt has {words} words, expected {EXCERPT_MIN_WORDS}-{EXCERPT_MAX_WORDS}")]
    InvalidExcerpt { words: usize },
    #[error("day number must be at least 1")]
    InvalidDayNumber,
    #[error("quiz parse error: {0}")]
    QuizParse(String),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

pub type Result<T> = std::result::Result<T, NarrativeError>;

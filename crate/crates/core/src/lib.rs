//! Retrieval-grounded ethnographic fieldwork game.
//!
//! The crate turns one source text into a two-phase learning game: a
//! fieldwork loop of generated scenes, images and collectible cultural
//! elements, followed by a ten-question academic-defense quiz.
//!
//! * [`corpus`] ingests and indexes the source text.
//! * [`providers`] talks to chat, image and moderation backends (or the
//!   deterministic [`providers::MockBackend`]).
//! * [`narrative`] owns prompt templates and model-output parsers.
//! * [`engine`] is the game state machine.
//! * [`service`] persists sessions, serves the REST API and runs scripted
//!   headless playthroughs.
//! * [`analytics`] reproduces the usability and quiz evaluation arithmetic.

pub mod analytics;
pub mod corpus;
pub mod engine;
pub mod narrative;
pub mod providers;
pub mod service;
pub mod text;

/// Text assets compiled into the crate.
pub mod assets {
    /// Public-domain (CC0) field-notes text used as the default corpus.
    pub const SAMPLE_CORPUS: &str = include_str!("../assets/sample_corpus.txt");
    /// `term<TAB>gloss` lines for the native terms of the sample corpus.
    pub const GLOSSARY: &str = include_str!("../assets/glossary.tsv");
    /// Default moderation denylist, one phrase per line.
    pub const DENYLIST: &str = include_str!("../assets/denylist.txt");
}

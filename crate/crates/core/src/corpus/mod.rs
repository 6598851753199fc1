//! Source-text ingestion: chunking, embedding, native-term lexicon and
//! similarity retrieval over a single book.
//!
//! A [`CorpusIndex`] is built once and never mutated. Every narrative the
//! engine generates is grounded in passages retrieved from it, and every
//! loading-screen quote is a verbatim sentence of the ingested text.

mod chunk;
mod embed;
mod index;
mod lexicon;
mod quote;

pub use chunk::{chunk_text, Chunk, ChunkConfig, MIN_FINAL_CHUNK};
pub use embed::{embed, Embedder, EmbeddingVector, HashEmbedder, HASH_DIM};
pub use index::{build_index, retrieve, CorpusIndex, IndexConfig, RetrievalResult, INDEX_FORMAT_VERSION};
pub use lexicon::{extract_lexicon, lexicon_mentions, parse_glossary, LexiconConfig, Marker, VocabEntry, GLOSS_PLACEHOLDER};
pub use quote::{pick_loading_quote, QUOTE_MAX_CHARS, QUOTE_MIN_CHARS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus text is empty")]
    EmptyCorpus,
    #[error("invalid chunk configuration: size {size} must exceed overlap {overlap}")]
    InvalidChunkConfig { size: usize, overlap: usize },
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding has dimension {found}, index expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index was built with embedder `{index}` but `{query}` was supplied")]
    EmbedderMismatch { index: String, query: String },
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("index has no chunks")]
    EmptyIndex,
    #[error("no retrieved context to quote from")]
    NoContext,
    #[error("glossary line {line}: expected `term<TAB>gloss`")]
    GlossaryFormat { line: usize },
    #[error("unsupported index format version {found} (expected {expected})")]
    UnsupportedFormat { found: u32, expected: u32 },
    #[error("malformed index file: {0}")]
    MalformedIndex(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

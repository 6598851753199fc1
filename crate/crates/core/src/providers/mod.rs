//! Uniform gateway to chat-completion, image-generation and moderation
//! backends.
//!
//! [`Gateway`] wraps any [`Backend`] with request validation, a retry budget
//! and a usage ledger. [`MockBackend`] is a deterministic offline backend:
//! scripted responses are looked up by request digest and everything else
//! gets a grammar-valid default, so scripted playthroughs never stall.

mod gateway;
mod http;
mod ledger;
mod mock;
mod mock_defaults;
mod moderation;
mod placeholder;

pub use gateway::{Gateway, RetryPolicy};
pub use http::{HttpBackend, HttpConfig, HttpEmbedder};
pub use ledger::{cost_totals, record_usage, report_total, PriceTable, UsageEntry, UsageKind, UsageLedger};
pub use mock::{request_digest, MockBackend};
pub use moderation::{moderate, Denylist, FailurePolicy, ModerationVerdict, RejectionSource};
pub use placeholder::placeholder_png;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::sha256_hex;

pub const IMAGE_PREFIX: &str = "pixel-art:";
pub const CANVAS_WIDTH: u32 = 320;
pub const CANVAS_HEIGHT: u32 = 240;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("image prompt must begin with `{IMAGE_PREFIX}`")]
    InvalidImagePrompt,
    #[error("usage units must be non-negative, got {0}")]
    InvalidUsage(i64),
}

impl ProviderError {
    /// Whether another attempt may succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, Self::Unavailable(_) | Self::Timeout(_))
    }
}

pub type Result<T, E = ProviderError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub max_tokens: u32,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Name of the template that produced the request. Not part of the
    /// digest; lets the mock choose the right default grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<()> {
        if self.system.trim().is_empty() || self.user.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("system and user prompts must be non-empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        request_digest(&self.system, &self.user)
    }
}

/// Model output plus the billed units (tokens, or an estimate).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub units: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub prompt: String,
    pub width: u32,
    pub height: u32,
}

impl ImageRequest {
    pub fn canvas(prompt: impl Into<String>) -> Self {
        Self { prompt: prompt.into(), width: CANVAS_WIDTH, height: CANVAS_HEIGHT }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.prompt.starts_with(IMAGE_PREFIX) {
            return Err(ProviderError::InvalidImagePrompt);
        }
        if self.width == 0 || self.height == 0 {
            return Err(ProviderError::InvalidRequest("image dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Content-addressed handle to a generated PNG.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageRef {
    /// SHA-256 of the PNG bytes.
    pub digest: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedImage {
    pub image: ImageRef,
    pub png: Vec<u8>,
}

impl GeneratedImage {
    pub fn from_png(png: Vec<u8>, width: u32, height: u32) -> Self {
        Self { image: ImageRef { digest: sha256_hex(&png), width, height }, png }
    }
}

/// A chat/image/moderation backend.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn chat(&self, req: &ChatRequest) -> Result<Completion>;
    /// PNG bytes of a `req.width × req.height` image.
    fn image(&self, req: &ImageRequest) -> Result<Vec<u8>>;
    /// Flagged categories, or `None` when the backend has no moderation
    /// endpoint.
    fn moderation(&self, text: &str) -> Result<Option<Vec<String>>>;
}

/// Rough token estimate used when a backend does not report usage.
pub(crate) fn estimate_units(parts: &[&str]) -> u64 {
    let chars: usize = parts.iter().map(|p| p.chars().count()).sum();
    chars.div_ceil(4) as u64
}

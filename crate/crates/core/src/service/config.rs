use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Result, ServiceError};
use crate::corpus::{ChunkConfig, LexiconConfig};
use crate::engine::EngineConfig;
use crate::providers::{FailurePolicy, HttpConfig, PriceTable, RetryPolicy};

/// Everything the CLI and the server read from one TOML file. Relative
/// paths are resolved against the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub server: ServerConfig,
    pub corpus: CorpusConfig,
    pub provider: ProviderConfig,
    pub engine: EngineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub store_dir: PathBuf,
    /// Generated PNGs are mirrored here; in memory only when unset.
    pub image_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { bind: "127.0.0.1:8080".into(), store_dir: PathBuf::from("sessions"), image_dir: Some(PathBuf::from("images")) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    /// Offline feature hashing.
    #[default]
    Hash,
    /// The HTTP provider's embeddings endpoint.
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Source text; the bundled sample corpus when unset.
    pub source: Option<PathBuf>,
    /// Prebuilt index. Loaded when the file exists, otherwise the source is
    /// indexed at startup.
    pub index: Option<PathBuf>,
    /// `term<TAB>gloss` file; the bundled glossary is used only with the
    /// bundled corpus.
    pub glossary: Option<PathBuf>,
    pub embedder: EmbedderKind,
    pub chunk: ChunkConfig,
    pub markers: Option<Vec<crate::corpus::Marker>>,
    pub known_terms: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub backend: BackendKind,
    /// `<digest>.txt` scripted responses for the mock backend.
    pub fixture_dir: Option<PathBuf>,
    /// Prompt template overrides, `<name>.tmpl`.
    pub templates_dir: Option<PathBuf>,
    /// One phrase per line; the bundled list when unset.
    pub denylist: Option<PathBuf>,
    pub moderation_policy: FailurePolicy,
    pub retry: RetryPolicy,
    pub prices: PriceTable,
    /// Credentials come from the environment, never from this file.
    pub http: HttpConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineSection {
    /// Replaces `intro_text` with the contents of a file.
    pub intro_file: Option<PathBuf>,
    #[serde(flatten)]
    pub settings: EngineConfig,
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.server.store_dir);
        let optional = [
            &mut self.server.image_dir,
            &mut self.corpus.source,
            &mut self.corpus.index,
            &mut self.corpus.glossary,
            &mut self.provider.fixture_dir,
            &mut self.provider.templates_dir,
            &mut self.provider.denylist,
            &mut self.engine.intro_file,
        ];
        for p in optional.into_iter().flatten() {
            fix(p);
        }
    }

    pub fn lexicon(&self) -> LexiconConfig {
        let mut lexicon = LexiconConfig { known_terms: self.corpus.known_terms.clone(), ..Default::default() };
        if let Some(markers) = &self.corpus.markers {
            lexicon.markers = markers.clone();
        }
        lexicon
    }

    /// Engine settings with `intro_file` applied.
    pub fn engine_config(&self) -> Result<EngineConfig> {
        let mut settings = self.engine.settings.clone();
        if let Some(path) = &self.engine.intro_file {
            let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
            settings.intro_text = text.trim().to_string();
        }
        if settings.vocab_spawn_min > settings.vocab_spawn_max {
            return Err(ServiceError::Config(format!(
                "vocab_spawn_min {} exceeds vocab_spawn_max {}",
                settings.vocab_spawn_min, settings.vocab_spawn_max
            )));
        }
        if settings.retrieval_k == 0 || settings.artifact_threshold == 0 {
            return Err(ServiceError::Config("retrieval_k and artifact_threshold must be at least 1".into()));
        }
        Ok(settings)
    }
}

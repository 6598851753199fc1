use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use super::config::{BackendKind, EmbedderKind, ServiceConfig};
use super::{Result, ServiceError};
use crate::assets;
use crate::corpus::{build_index, parse_glossary, CorpusIndex, Embedder, HashEmbedder, IndexConfig};
use crate::engine::{Engine, ImageCache};
use crate::narrative::TemplateSet;
use crate::providers::{Backend, Denylist, Gateway, HttpBackend, HttpEmbedder, MockBackend};

/// The shared pieces an [`Engine`] is built from.
pub struct Components {
    pub backend: Arc<dyn Backend>,
    pub embedder: Arc<dyn Embedder>,
    http: Option<HttpBackend>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
}

/// Backend and embedder per config. Builds the blocking HTTP client, so call
/// it outside any async runtime.
pub fn components(config: &ServiceConfig) -> Result<Components> {
    let http = match config.provider.backend {
        BackendKind::Http => Some(HttpBackend::new(config.provider.http.clone().apply_env())?),
        BackendKind::Mock => None,
    };
    let backend: Arc<dyn Backend> = match &http {
        Some(h) => Arc::new(h.clone()),
        None => {
            let mut mock = MockBackend::new();
            if let Some(dir) = &config.provider.fixture_dir {
                mock = mock.with_fixture_dir(dir);
            }
            Arc::new(mock)
        }
    };
    let embedder: Arc<dyn Embedder> = match config.corpus.embedder {
        EmbedderKind::Hash => Arc::new(HashEmbedder::default()),
        EmbedderKind::Remote => {
            let h = match &http {
                Some(h) => h.clone(),
                None => HttpBackend::new(config.provider.http.clone().apply_env())?,
            };
            Arc::new(HttpEmbedder::new(h))
        }
    };
    Ok(Components { backend, embedder, http })
}

impl Components {
    pub fn uses_http(&self) -> bool {
        self.http.is_some()
    }
}

/// Index configuration with the glossary resolved: an explicit file, or
/// the bundled glossary when the bundled corpus is in use.
pub fn index_config(config: &ServiceConfig) -> Result<IndexConfig> {
    let mut lexicon = config.lexicon();
    lexicon.glossary = match (&config.corpus.glossary, &config.corpus.source) {
        (Some(path), _) => parse_glossary(&read(path)?)?,
        (None, None) => parse_glossary(assets::GLOSSARY)?,
        (None, Some(_)) => Default::default(),
    };
    config.corpus.chunk.validate()?;
    Ok(IndexConfig { chunk: config.corpus.chunk, lexicon })
}

/// Indexes the configured source (or the bundled sample).
pub fn ingest(config: &ServiceConfig, embedder: &dyn Embedder) -> Result<CorpusIndex> {
    let raw = match &config.corpus.source {
        Some(path) => read(path)?,
        None => assets::SAMPLE_CORPUS.to_string(),
    };
    Ok(build_index(&raw, &index_config(config)?, embedder)?)
}

/// The configured index file when it exists, otherwise a fresh index.
pub fn load_or_build_index(config: &ServiceConfig, embedder: &dyn Embedder) -> Result<CorpusIndex> {
    if let Some(path) = config.corpus.index.as_deref().filter(|p| p.exists()) {
        let file = std::fs::File::open(path)?;
        let index = CorpusIndex::read_from(BufReader::new(file))?;
        if index.embedder() != embedder.name() {
            return Err(ServiceError::Config(format!(
                "{} was built with embedder `{}` but `{}` is configured; re-run ingest",
                path.display(),
                index.embedder(),
                embedder.name()
            )));
        }
        tracing::info!(path = %path.display(), chunks = index.chunks().len(), "loaded index");
        return Ok(index);
    }
    let index = ingest(config, embedder)?;
    tracing::info!(chunks = index.chunks().len(), terms = index.lexicon().len(), "indexed corpus");
    Ok(index)
}

/// A ready engine for `config`.
pub fn build_engine(config: &ServiceConfig) -> Result<Engine> {
    let c = components(config)?;
    let index = load_or_build_index(config, c.embedder.as_ref())?;
    engine_from(config, c, Arc::new(index))
}

pub fn engine_from(config: &ServiceConfig, c: Components, index: Arc<CorpusIndex>) -> Result<Engine> {
    let gateway = Gateway::new(c.backend)
        .with_retry(config.provider.retry)
        .with_prices(config.provider.prices)
        .with_moderation_policy(config.provider.moderation_policy);
    let templates = match &config.provider.templates_dir {
        Some(dir) => TemplateSet::with_overrides(dir)?,
        None => TemplateSet::builtin(),
    };
    let denylist = match &config.provider.denylist {
        Some(path) => Denylist::parse(&read(path)?),
        None => Denylist::parse(assets::DENYLIST),
    };
    let images = match &config.server.image_dir {
        Some(dir) => ImageCache::with_dir(dir)?,
        None => ImageCache::in_memory(),
    };
    Ok(Engine::new(Some(index), c.embedder, Arc::new(gateway), config.engine_config()?)
        .with_templates(templates)
        .with_denylist(denylist)
        .with_images(Arc::new(images)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_builds_offline_engine() {
        let mut config = ServiceConfig::default();
        config.server.image_dir = None;
        let engine = build_engine(&config).unwrap();
        assert_eq!(engine.gateway().backend().name(), "mock");
        assert!(engine.index().unwrap().lookup_term("kula").is_some());
    }

    #[test]
    fn missing_files_are_diagnosed() {
        let mut config = ServiceConfig::default();
        config.corpus.source = Some("/nonexistent/book.txt".into());
        let err = build_engine(&config).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/book.txt"), "{err}");
    }

    #[test]
    fn index_file_with_other_embedder_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.jsonl");
        let small = HashEmbedder::with_dim(16);
        let index = ingest(&ServiceConfig::default(), &small).unwrap();
        std::fs::write(&path, index.to_bytes()).unwrap();
        let mut config = ServiceConfig::default();
        config.corpus.index = Some(path);
        config.server.image_dir = None;
        assert!(build_engine(&config).is_err());
    }
}

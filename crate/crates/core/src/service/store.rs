use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::engine::{GameSession, Transcript, TRANSCRIPT_SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("stored session has schema version {found}, this build reads {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error("corrupt session file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// On-disk envelope of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSession {
    pub id: String,
    pub schema_version: u32,
    /// Seconds since the Unix epoch.
    pub updated_at: u64,
    pub transcript: Transcript,
}

/// One JSON document per session in a directory. Writes go to a temp file
/// in the same directory and are renamed into place, so a crash leaves
/// either the old or the new document.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

/// Ids become file names, so only a conservative alphabet is accepted.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_session_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    pub fn save(&self, session: &GameSession) -> Result<StoredSession, StoreError> {
        let path = self.path(&session.id)?;
        let updated_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let stored = StoredSession {
            id: session.id.clone(),
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            updated_at,
            transcript: session.transcript(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, &stored).map_err(std::io::Error::from)?;
        tmp.as_file_mut().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(stored)
    }

    pub fn load_stored(&self, id: &str) -> Result<StoredSession, StoreError> {
        let path = self.path(id)?;
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |message: String| StoreError::Corrupt { path: path.clone(), message };
        // version first, so an old document reports a mismatch rather than
        // whatever field happens to fail to parse
        let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        let found = value.get("schema_version").and_then(serde_json::Value::as_u64).ok_or_else(|| corrupt("no schema_version".into()))?;
        if found != u64::from(TRANSCRIPT_SCHEMA_VERSION) {
            return Err(StoreError::SchemaMismatch { found: found as u32, expected: TRANSCRIPT_SCHEMA_VERSION });
        }
        let stored: StoredSession = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
        if stored.id != id || stored.transcript.session.id != id {
            return Err(corrupt(format!("document belongs to session {:?}", stored.id)));
        }
        Ok(stored)
    }

    pub fn load(&self, id: &str) -> Result<GameSession, StoreError> {
        Ok(self.load_stored(id)?.transcript.session)
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.exists()).unwrap_or(false)
    }

    /// Stored session ids, sorted.
    pub fn list(&self) -> std::io::Result<Vec<String>> {
        let mut ids: Vec<String> = std::fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".json").map(str::to_string))
            .filter(|id| valid_session_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }
}

/// Writes `contents` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Content-addressed PNG store: always in memory, optionally mirrored to a
/// directory as `<digest>.png` so images survive restarts.
#[derive(Debug, Default)]
pub struct ImageCache {
    dir: Option<PathBuf>,
    mem: Mutex<BTreeMap<String, Vec<u8>>>,
}

impl ImageCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir: Some(dir), mem: Mutex::default() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn put(&self, digest: &str, png: &[u8]) {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{digest}.png"));
            if !path.exists() {
                let written = tempfile::NamedTempFile::new_in(dir)
                    .and_then(|mut f| std::io::Write::write_all(&mut f, png).map(|_| f))
                    .and_then(|f| f.persist(&path).map_err(|e| e.error));
                if let Err(e) = written {
                    tracing::warn!(%e, digest, "could not persist image");
                }
            }
        }
        self.mem.lock().expect("image cache lock poisoned").insert(digest.to_string(), png.to_vec());
    }

    pub fn get(&self, digest: &str) -> Option<Vec<u8>> {
        if let Some(png) = self.mem.lock().expect("image cache lock poisoned").get(digest) {
            return Some(png.clone());
        }
        // digests are hex; anything else never touches the filesystem
        if digest.is_empty() || !digest.chars().all(|c| c.is_ascii_hexdigit()) {
            return None;
        }
        let png = std::fs::read(self.dir.as_ref()?.join(format!("{digest}.png"))).ok()?;
        self.mem.lock().expect("image cache lock poisoned").insert(digest.to_string(), png.clone());
        Some(png)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mirror_survives_new_cache() {
        let dir = tempfile::tempdir().unwrap();
        ImageCache::with_dir(dir.path()).unwrap().put("abc123", b"png");
        let fresh = ImageCache::with_dir(dir.path()).unwrap();
        assert_eq!(fresh.get("abc123").as_deref(), Some(&b"png"[..]));
        assert_eq!(fresh.get("../etc"), None);
        assert_eq!(ImageCache::in_memory().get("abc123"), None);
    }
}

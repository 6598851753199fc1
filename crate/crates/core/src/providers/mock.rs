use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::mock_defaults;
use super::{estimate_units, placeholder_png, Backend, ChatRequest, Completion, ImageRequest, ProviderError, Result};

/// Key of a scripted response: lowercase hex SHA-256 over the system
/// prompt, a zero byte, then the user prompt.
pub fn request_digest(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(user.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Offline backend whose every answer is a pure function of the scripts and
/// the request.
///
/// Scripted chat responses come from memory or from `<fixture_dir>/<digest>.txt`.
/// Unscripted requests get a grammar-valid default for the request's
/// template. Images are digest-derived placeholders.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    scripts: BTreeMap<String, String>,
    fixture_dir: Option<PathBuf>,
    moderation_rules: Vec<(String, String)>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixture_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.fixture_dir = Some(dir.into());
        self
    }

    pub fn with_script(mut self, digest: impl Into<String>, response: impl Into<String>) -> Self {
        self.scripts.insert(digest.into(), response.into());
        self
    }

    pub fn script_request(self, req: &ChatRequest, response: impl Into<String>) -> Self {
        let digest = req.digest();
        self.with_script(digest, response)
    }

    /// Flags text containing `needle` (case-insensitive) with `category`.
    pub fn with_moderation_rule(mut self, needle: &str, category: &str) -> Self {
        self.moderation_rules.push((needle.to_lowercase(), category.to_string()));
        self
    }

    pub fn fixture_dir(&self) -> Option<&Path> {
        self.fixture_dir.as_deref()
    }

    fn scripted(&self, digest: &str) -> Result<Option<String>> {
        if let Some(s) = self.scripts.get(digest) {
            return Ok(Some(s.clone()));
        }
        let Some(dir) = &self.fixture_dir else { return Ok(None) };
        match std::fs::read_to_string(dir.join(format!("{digest}.txt"))) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ProviderError::Unavailable(format!("reading fixture {digest}: {e}"))),
        }
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn chat(&self, req: &ChatRequest) -> Result<Completion> {
        let digest = req.digest();
        let text = match self.scripted(&digest)? {
            Some(s) => s,
            None => mock_defaults::respond(req, &digest),
        };
        let units = estimate_units(&[&req.system, &req.user, &text]);
        Ok(Completion { text, units })
    }

    fn image(&self, req: &ImageRequest) -> Result<Vec<u8>> {
        Ok(placeholder_png(&req.prompt, req.width, req.height))
    }

    fn moderation(&self, text: &str) -> Result<Option<Vec<String>>> {
        let lower = text.to_lowercase();
        let mut flagged: Vec<String> = self
            .moderation_rules
            .iter()
            .filter(|(needle, _)| lower.contains(needle.as_str()))
            .map(|(_, cat)| cat.clone())
            .collect();
        flagged.dedup();
        Ok(Some(flagged))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(template: Option<&str>) -> ChatRequest {
        ChatRequest {
            system: "system".into(),
            user: "DAY: 1\nSOURCE PASSAGES:\n[chunk 0]\nThe canoe is ready.".into(),
            max_tokens: 100,
            temperature: 0.5,
            seed: None,
            template: template.map(str::to_string),
        }
    }

    #[test]
    fn scripted_fixture_verbatim() {
        let r = req(Some("scene"));
        let mock = MockBackend::new().script_request(&r, "SCRIPTED");
        assert_eq!(mock.chat(&r).unwrap().text, "SCRIPTED");
    }

    #[test]
    fn fixture_directory_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let r = req(None);
        std::fs::write(dir.path().join(format!("{}.txt", r.digest())), "FROM DISK").unwrap();
        let mock = MockBackend::new().with_fixture_dir(dir.path());
        assert_eq!(mock.chat(&r).unwrap().text, "FROM DISK");
    }

    #[test]
    fn digest_ignores_template_tag_and_separates_parts() {
        assert_eq!(req(None).digest(), req(Some("quiz")).digest());
        assert_ne!(request_digest("ab", "c"), request_digest("a", "bc"));
    }

    #[test]
    fn same_request_same_response() {
        let mock = MockBackend::new();
        assert_eq!(mock.chat(&req(Some("scene"))).unwrap(), mock.chat(&req(Some("scene"))).unwrap());
    }
}

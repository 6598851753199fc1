use serde::{Deserialize, Serialize};

use super::Backend;
use crate::text::normalize;

/// Case-folded patterns, one per line. Lines starting with `#` are comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Denylist {
    patterns: Vec<String>,
}

impl Denylist {
    pub fn parse(text: &str) -> Self {
        let mut patterns: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(normalize)
            .collect();
        patterns.dedup();
        Self { patterns }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Patterns found on word boundaries in the normalized text.
    pub fn matches(&self, text: &str) -> Vec<String> {
        let hay = normalize(text);
        self.patterns
            .iter()
            .filter(|p| contains_word(&hay, p))
            .cloned()
            .collect()
    }
}

fn contains_word(hay: &str, pattern: &str) -> bool {
    hay.match_indices(pattern).any(|(pos, _)| {
        let before = hay[..pos].chars().next_back();
        let after = hay[pos + pattern.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// What to do when the provider check itself fails.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    #[default]
    FailClosed,
    FailOpen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionSource {
    Denylist,
    Provider,
    ProviderFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationVerdict {
    pub allowed: bool,
    pub categories: Vec<String>,
    pub matched_terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<RejectionSource>,
}

impl ModerationVerdict {
    fn allow() -> Self {
        Self { allowed: true, categories: Vec::new(), matched_terms: Vec::new(), source: None }
    }

    /// Category to show the player; never empty for a rejection.
    pub fn reason(&self) -> String {
        self.categories
            .first()
            .cloned()
            .unwrap_or_else(|| if self.matched_terms.is_empty() { "unspecified".into() } else { "denylist".into() })
    }
}

/// Two-stage check: local denylist first, then the provider (if any) only
/// when the denylist allows the text.
pub fn moderate(text: &str, denylist: &Denylist, provider: Option<&dyn Backend>, policy: FailurePolicy) -> ModerationVerdict {
    let matched = denylist.matches(text);
    if !matched.is_empty() {
        return ModerationVerdict {
            allowed: false,
            categories: vec!["denylist".into()],
            matched_terms: matched,
            source: Some(RejectionSource::Denylist),
        };
    }
    let Some(provider) = provider else { return ModerationVerdict::allow() };
    match provider.moderation(text) {
        Ok(None) => ModerationVerdict::allow(),
        Ok(Some(categories)) if categories.is_empty() => ModerationVerdict::allow(),
        Ok(Some(categories)) => ModerationVerdict {
            allowed: false,
            categories,
            matched_terms: Vec::new(),
            source: Some(RejectionSource::Provider),
        },
        Err(err) => match policy {
            FailurePolicy::FailOpen => {
                tracing::warn!(%err, "moderation provider failed; allowing input");
                ModerationVerdict::allow()
            }
            FailurePolicy::FailClosed => ModerationVerdict {
                allowed: false,
                categories: vec!["moderation_unavailable".into()],
                matched_terms: Vec::new(),
                source: Some(RejectionSource::ProviderFailure),
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{MockBackend, ProviderError};

    struct Down;
    impl Backend for Down {
        fn name(&self) -> &str {
            "down"
        }
        fn chat(&self, _: &crate::providers::ChatRequest) -> crate::providers::Result<crate::providers::Completion> {
            Err(ProviderError::Unavailable("down".into()))
        }
        fn image(&self, _: &crate::providers::ImageRequest) -> crate::providers::Result<Vec<u8>> {
            Err(ProviderError::Unavailable("down".into()))
        }
        fn moderation(&self, _: &str) -> crate::providers::Result<Option<Vec<String>>> {
            Err(ProviderError::Unavailable("down".into()))
        }
    }

    fn denylist() -> Denylist {
        Denylist::parse("# test list\nslurword\nKill Them   All\n")
    }

    #[test]
    fn denylisted_term_rejected_with_evidence() {
        let v = moderate("You SLURWORD!", &denylist(), None, FailurePolicy::FailClosed);
        assert!(!v.allowed);
        assert_eq!(v.matched_terms, vec!["slurword"]);
        assert_eq!(v.source, Some(RejectionSource::Denylist));
    }

    #[test]
    fn multiword_pattern_whitespace_normalized() {
        let v = moderate("we should kill\n them  all now", &denylist(), None, FailurePolicy::FailClosed);
        assert_eq!(v.matched_terms, vec!["kill them all"]);
    }

    #[test]
    fn benign_text_without_provider() {
        let v = moderate("rob the yam and run away", &denylist(), None, FailurePolicy::FailClosed);
        assert!(v.allowed);
    }

    #[test]
    fn word_boundaries_respected() {
        assert!(Denylist::parse("ass").matches("a class passage").is_empty());
    }

    #[test]
    fn provider_flags_after_local_allow() {
        let mock = MockBackend::new().with_moderation_rule("outsiders", "hate");
        let v = moderate("I despise outsiders", &denylist(), Some(&mock), FailurePolicy::FailClosed);
        assert!(!v.allowed);
        assert_eq!(v.categories, vec!["hate"]);
        assert_eq!(v.source, Some(RejectionSource::Provider));
    }

    #[test]
    fn provider_failure_policy() {
        let closed = moderate("hello", &denylist(), Some(&Down), FailurePolicy::FailClosed);
        assert!(!closed.allowed && !closed.categories.is_empty());
        let open = moderate("hello", &denylist(), Some(&Down), FailurePolicy::FailOpen);
        assert!(open.allowed);
    }
}

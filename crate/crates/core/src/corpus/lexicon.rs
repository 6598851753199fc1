use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Chunk, CorpusError, Result};

/// Gloss used until a provider call (or the glossary) fills in the meaning.
pub const GLOSS_PLACEHOLDER: &str = "(meaning revealed in play)";

const MAX_TERM_CHARS: usize = 40;
const MAX_TERM_WORDS: usize = 4;

/// A native-language expression found in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub term: String,
    pub gloss: String,
    pub source_chunk: usize,
}

impl VocabEntry {
    pub fn has_gloss(&self) -> bool {
        self.gloss != GLOSS_PLACEHOLDER
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub open: String,
    pub close: String,
}

impl Marker {
    pub fn new(open: &str, close: &str) -> Self {
        Self { open: open.into(), close: close.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconConfig {
    /// Emphasis markers around native terms, `_kula_` style by default.
    pub markers: Vec<Marker>,
    /// Unmarked native tokens to pick up verbatim (case-sensitive, whole word).
    pub known_terms: Vec<String>,
    /// Lowercased term → English gloss.
    pub glossary: BTreeMap<String, String>,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        Self {
            markers: vec![Marker::new("_", "_"), Marker::new("*", "*")],
            known_terms: Vec::new(),
            glossary: BTreeMap::new(),
        }
    }
}

/// Parses a glossary file: UTF-8 lines `term<TAB>gloss`; blank lines and
/// `#` comments are skipped. Keys are lowercased.
pub fn parse_glossary(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (term, gloss) = line.split_once('\t').ok_or(CorpusError::GlossaryFormat { line: i + 1 })?;
        let (term, gloss) = (term.trim(), gloss.trim());
        if term.is_empty() || gloss.is_empty() {
            return Err(CorpusError::GlossaryFormat { line: i + 1 });
        }
        out.entry(term.to_lowercase()).or_insert_with(|| gloss.to_string());
    }
    Ok(out)
}

/// Finds marked and known native terms in document order.
///
/// Duplicates (case-insensitive) are removed; the first occurrence wins.
pub fn extract_lexicon(chunks: &[Chunk], config: &LexiconConfig) -> Vec<VocabEntry> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for chunk in chunks {
        let mut found: Vec<(usize, &str)> = Vec::new();
        for marker in &config.markers {
            found.extend(marked_terms(&chunk.text, marker));
        }
        for term in &config.known_terms {
            found.extend(whole_word_matches(&chunk.text, term).map(|pos| (pos, term.as_str())));
        }
        found.sort_by_key(|&(pos, _)| pos);
        for (_, term) in found {
            let key = term.to_lowercase();
            if seen.insert(key.clone()) {
                let gloss = config.glossary.get(&key).cloned().unwrap_or_else(|| GLOSS_PLACEHOLDER.to_string());
                out.push(VocabEntry { term: term.to_string(), gloss, source_chunk: chunk.id });
            }
        }
    }
    out
}

fn marked_terms<'a>(text: &'a str, marker: &Marker) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    if marker.open.is_empty() || marker.close.is_empty() {
        return out;
    }
    let mut cursor = 0;
    while let Some(rel) = text[cursor..].find(&marker.open) {
        let open_at = cursor + rel;
        let inner_start = open_at + marker.open.len();
        cursor = inner_start;
        if text[..open_at].chars().next_back().is_some_and(char::is_alphanumeric) {
            continue;
        }
        let Some(close_rel) = text[inner_start..].find(&marker.close) else { break };
        let inner_end = inner_start + close_rel;
        let after = inner_end + marker.close.len();
        let term = &text[inner_start..inner_end];
        if is_plausible_term(term) && !text[after..].chars().next().is_some_and(char::is_alphanumeric) {
            out.push((inner_start, term));
            cursor = after;
        }
    }
    out
}

fn is_plausible_term(term: &str) -> bool {
    !term.is_empty()
        && term == term.trim()
        && term.chars().count() <= MAX_TERM_CHARS
        && term.split_whitespace().count() <= MAX_TERM_WORDS
        && term.chars().any(char::is_alphabetic)
        && term.chars().all(|c| c.is_alphabetic() || c == ' ' || c == '\'' || c == '-')
}

/// Case-insensitive whole-word occurrence of `term` in `text`.
pub fn lexicon_mentions(text: &str, term: &str) -> bool {
    let term = term.to_lowercase();
    !term.is_empty() && whole_word_matches(&text.to_lowercase(), &term).next().is_some()
}

pub(crate) fn whole_word_matches<'a>(text: &'a str, term: &'a str) -> impl Iterator<Item = usize> + 'a {
    text.match_indices(term).map(|(pos, _)| pos).filter(move |&pos| {
        let before = text[..pos].chars().next_back();
        let after = text[pos + term.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

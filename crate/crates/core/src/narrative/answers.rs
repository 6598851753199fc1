use std::sync::OnceLock;

use regex::{NoExpand, Regex};
use serde::{Deserialize, Serialize};

use super::QuizQuestion;
use crate::corpus::Chunk;

/// A quoted span found verbatim in a source chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub chunk_id: usize,
    pub span: String,
}

const MIN_QUOTE_WORDS: usize = 3;

fn quote_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""([^"]+)"|“([^”]+)”"#).expect("valid regex"))
}

/// Double-quoted spans (straight or curly) of at least three words.
/// Shorter quotes are usually a term being named rather than cited.
pub fn extract_quotes(text: &str) -> Vec<String> {
    quote_re()
        .captures_iter(text)
        .filter_map(|c| c.get(1).or(c.get(2)))
        .map(|m| m.as_str().trim().to_string())
        .filter(|q| q.split_whitespace().count() >= MIN_QUOTE_WORDS)
        .collect()
}

/// Splits the quotes of `answer` into citations (verbatim in some chunk,
/// first matching chunk wins) and ungrounded spans.
pub fn ground_quotes(answer: &str, chunks: &[Chunk]) -> (Vec<Citation>, Vec<String>) {
    let mut cited = Vec::new();
    let mut ungrounded = Vec::new();
    for q in extract_quotes(answer) {
        let probe = q.trim_end_matches(['.', ',', ';']);
        match chunks.iter().find(|c| c.text.contains(&q) || (!probe.is_empty() && c.text.contains(probe))) {
            Some(c) => {
                let span = if c.text.contains(&q) { q } else { probe.to_string() };
                cited.push(Citation { chunk_id: c.id, span });
            }
            None => ungrounded.push(q),
        }
    }
    (cited, ungrounded)
}

fn letter_reveal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:the\s+)?(?:correct\s+|right\s+)?(?:answer|option|choice|letter)\s*(?:is|:|=)?\s*\(?[A-D]\)?(?:[\s.,;!?]|$)")
            .expect("valid regex")
    })
}

/// Removes answer-letter reveals and verbatim copies of the correct option
/// from a hint.
pub fn sanitize_hint(hint: &str, question: &QuizQuestion) -> String {
    let mut out = letter_reveal_re().replace_all(hint, "the right idea ").into_owned();
    let correct = question.correct_option().trim();
    if correct.chars().count() >= 4 {
        let re = Regex::new(&format!("(?i){}", regex::escape(correct))).expect("escaped pattern is valid");
        out = re.replace_all(&out, NoExpand("…")).into_owned();
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

use rand::Rng;

use super::{CorpusError, Result, RetrievalResult};
use crate::text::sentences;

pub const QUOTE_MIN_CHARS: usize = 80;
pub const QUOTE_MAX_CHARS: usize = 400;

/// Draws a verbatim sentence of 80–400 chars from the top result's chunk.
/// Falls back to the longest sentence when none fits the window.
pub fn pick_loading_quote<R: Rng + ?Sized>(results: &[RetrievalResult], rng: &mut R) -> Result<String> {
    let top = results.first().ok_or(CorpusError::NoContext)?;
    let all = sentences(&top.chunk.text);
    let fitting: Vec<&str> = all
        .iter()
        .copied()
        .filter(|s| (QUOTE_MIN_CHARS..=QUOTE_MAX_CHARS).contains(&s.chars().count()))
        .collect();
    if !fitting.is_empty() {
        return Ok(fitting[rng.gen_range(0..fitting.len())].to_string());
    }
    all.iter()
        .copied()
        .reduce(|best, s| if s.chars().count() > best.chars().count() { s } else { best })
        .map(str::to_string)
        .ok_or(CorpusError::NoContext)
}

use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

/// Shortest final chunk that is kept on its own.
pub const MIN_FINAL_CHUNK: usize = 50;

/// A contiguous span of the source text. Offsets count Unicode scalar
/// values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: usize,
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Chunk {
    pub fn len_chars(&self) -> usize {
        self.char_end - self.char_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkConfig {
    pub size: usize,
    pub overlap: usize,
    pub min_final: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self { size: 1000, overlap: 200, min_final: MIN_FINAL_CHUNK }
    }
}

impl ChunkConfig {
    pub fn new(size: usize, overlap: usize) -> Self {
        Self { size, overlap, min_final: MIN_FINAL_CHUNK }
    }

    pub fn stride(&self) -> usize {
        self.size - self.overlap
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size <= self.overlap {
            return Err(CorpusError::InvalidChunkConfig { size: self.size, overlap: self.overlap });
        }
        Ok(())
    }
}

/// Cuts `raw` into windows of `size` chars starting every `size - overlap`
/// chars. Text that fits in one window is a single chunk.
///
/// A final window shorter than `min_final` is dropped when the previous
/// window already reaches the end of the text, and merged into the previous
/// window otherwise, so the chunks always cover the whole text.
pub fn chunk_text(raw: &str, config: &ChunkConfig) -> Result<Vec<Chunk>> {
    if raw.trim().is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    config.validate()?;

    // byte offset of every char, plus the end sentinel
    let mut offsets: Vec<usize> = raw.char_indices().map(|(i, _)| i).collect();
    let n = offsets.len();
    offsets.push(raw.len());

    let mut spans: Vec<(usize, usize)> = if n <= config.size {
        vec![(0, n)]
    } else {
        (0..n).step_by(config.stride()).map(|start| (start, (start + config.size).min(n))).collect()
    };

    if spans.len() > 1 {
        let (start, end) = spans[spans.len() - 1];
        if end - start < config.min_final {
            spans.pop();
            let prev = spans.last_mut().expect("at least one span remains");
            if prev.1 < n {
                prev.1 = n;
            }
        }
    }

    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(id, (start, end))| Chunk {
            id,
            text: raw[offsets[start]..offsets[end]].to_string(),
            char_start: start,
            char_end: end,
        })
        .collect())
}

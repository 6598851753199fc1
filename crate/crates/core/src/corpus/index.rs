use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::embed::{embed, Embedder, EmbeddingVector};
use super::{chunk_text, extract_lexicon, Chunk, ChunkConfig, CorpusError, LexiconConfig, Result, VocabEntry};
use crate::text::sha256_hex;

pub const INDEX_FORMAT_VERSION: u32 = 1;
const INDEX_MAGIC: &str = "fieldwork-index";

/// Scores closer than this are treated as tied and ordered by chunk id.
const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    pub chunk: ChunkConfig,
    pub lexicon: LexiconConfig,
}

/// Chunked, embedded source text plus its native-term lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    chunks: Vec<Chunk>,
    vectors: Vec<EmbeddingVector>,
    lexicon: Vec<VocabEntry>,
    source_digest: String,
    embedder: String,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub chunk: Chunk,
    pub score: f64,
}

pub fn build_index(raw: &str, config: &IndexConfig, embedder: &dyn Embedder) -> Result<CorpusIndex> {
    let chunks = chunk_text(raw, &config.chunk)?;
    let vectors = chunks.iter().map(|c| embed(&c.text, embedder)).collect::<Result<Vec<_>>>()?;
    let lexicon = extract_lexicon(&chunks, &config.lexicon);
    Ok(CorpusIndex {
        chunks,
        vectors,
        lexicon,
        source_digest: sha256_hex(raw.as_bytes()),
        embedder: embedder.name(),
        dim: embedder.dim(),
    })
}

/// Top `k` chunks by cosine similarity to `query`, best first; near-equal
/// scores are ordered by ascending chunk id.
pub fn retrieve(index: &CorpusIndex, query: &str, k: usize, embedder: &dyn Embedder) -> Result<Vec<RetrievalResult>> {
    if k < 1 {
        return Err(CorpusError::InvalidK(k));
    }
    if index.chunks.is_empty() {
        return Err(CorpusError::EmptyIndex);
    }
    if embedder.name() != index.embedder {
        return Err(CorpusError::EmbedderMismatch { index: index.embedder.clone(), query: embedder.name() });
    }
    let q = embed(query, embedder)?;
    let mut scored: Vec<(usize, f64)> = index.vectors.iter().enumerate().map(|(i, v)| (i, q.cosine(v))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    // re-order runs of near-equal scores by id
    let mut start = 0;
    while start < scored.len() {
        let head = scored[start].1;
        let mut end = start + 1;
        while end < scored.len() && head - scored[end].1 <= TIE_EPSILON {
            end += 1;
        }
        scored[start..end].sort_by_key(|&(i, _)| i);
        start = end;
    }

    Ok(scored
        .into_iter()
        .take(k)
        .map(|(i, score)| RetrievalResult { chunk: index.chunks[i].clone(), score })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    format_version: u32,
    dim: usize,
    embedder: String,
    source_digest: String,
    chunks: usize,
    lexicon: usize,
}

#[derive(Serialize, Deserialize)]
struct ChunkRecord {
    id: usize,
    char_start: usize,
    char_end: usize,
    text: String,
    vector: EmbeddingVector,
}

impl CorpusIndex {
    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    pub fn lexicon(&self) -> &[VocabEntry] {
        &self.lexicon
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    pub fn embedder(&self) -> &str {
        &self.embedder
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chunk(&self, id: usize) -> Option<&Chunk> {
        self.chunks.get(id)
    }

    pub fn lookup_term(&self, term: &str) -> Option<&VocabEntry> {
        let key = term.trim().to_lowercase();
        self.lexicon.iter().find(|e| e.term.to_lowercase() == key)
    }

    /// Writes the JSON-lines index file: a header line, one line per chunk
    /// (with its vector), then one line per lexicon entry.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            format: INDEX_MAGIC.into(),
            format_version: INDEX_FORMAT_VERSION,
            dim: self.dim,
            embedder: self.embedder.clone(),
            source_digest: self.source_digest.clone(),
            chunks: self.chunks.len(),
            lexicon: self.lexicon.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (c, v) in self.chunks.iter().zip(&self.vectors) {
            let rec = ChunkRecord {
                id: c.id,
                char_start: c.char_start,
                char_end: c.char_end,
                text: c.text.clone(),
                vector: v.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        for e in &self.lexicon {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = |what: &str| -> Result<String> {
            lines.next().transpose()?.ok_or_else(|| CorpusError::MalformedIndex(format!("missing {what}")))
        };
        let header: Header = serde_json::from_str(&next_line("header")?)?;
        if header.format != INDEX_MAGIC {
            return Err(CorpusError::MalformedIndex(format!("unexpected format tag `{}`", header.format)));
        }
        if header.format_version != INDEX_FORMAT_VERSION {
            return Err(CorpusError::UnsupportedFormat { found: header.format_version, expected: INDEX_FORMAT_VERSION });
        }
        let mut chunks = Vec::with_capacity(header.chunks);
        let mut vectors = Vec::with_capacity(header.chunks);
        for expected_id in 0..header.chunks {
            let rec: ChunkRecord = serde_json::from_str(&next_line("chunk")?)?;
            if rec.id != expected_id || rec.char_end <= rec.char_start {
                return Err(CorpusError::MalformedIndex(format!("bad chunk record {}", rec.id)));
            }
            if rec.vector.dim() != header.dim {
                return Err(CorpusError::DimensionMismatch { expected: header.dim, found: rec.vector.dim() });
            }
            vectors.push(EmbeddingVector::from_raw(rec.vector.values().to_vec()));
            chunks.push(Chunk { id: rec.id, text: rec.text, char_start: rec.char_start, char_end: rec.char_end });
        }
        let mut lexicon = Vec::with_capacity(header.lexicon);
        for _ in 0..header.lexicon {
            let entry: VocabEntry = serde_json::from_str(&next_line("lexicon entry")?)?;
            if entry.source_chunk >= chunks.len() {
                return Err(CorpusError::MalformedIndex(format!("lexicon entry `{}` points past the chunks", entry.term)));
            }
            lexicon.push(entry);
        }
        Ok(Self {
            chunks,
            vectors,
            lexicon,
            source_digest: header.source_digest,
            embedder: header.embedder,
            dim: header.dim,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::HashEmbedder;

    const THREE: &str = "The canoe is launched with a spell. The sailors paint the prow red and white. \
                         The necklace travels clockwise around the islands. The armshell goes the other way. \
                         The yams are stored in a house with gaps between the logs, so all may see the harvest.";

    fn small_config() -> IndexConfig {
        IndexConfig { chunk: ChunkConfig::new(80, 0), ..Default::default() }
    }

    #[test]
    fn parallel_arrays() {
        let idx = build_index(THREE, &small_config(), &HashEmbedder::default()).unwrap();
        assert_eq!(idx.chunks().len(), 3);
        assert_eq!(idx.vectors().len(), 3);
        assert!(idx.vectors().iter().all(|v| (v.norm() - 1.0).abs() <= 1e-6));
    }

    #[test]
    fn rebuild_serializes_identically() {
        let e = HashEmbedder::default();
        let a = build_index(THREE, &small_config(), &e).unwrap().to_bytes();
        let b = build_index(THREE, &small_config(), &e).unwrap().to_bytes();
        assert_eq!(sha256_hex(&a), sha256_hex(&b));
        let back = CorpusIndex::from_bytes(&a).unwrap();
        assert_eq!(back.to_bytes(), a);
    }

    #[test]
    fn empty_raw() {
        assert!(matches!(build_index("", &IndexConfig::default(), &HashEmbedder::default()), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn self_query_ranks_first_and_k_clamps() {
        let e = HashEmbedder::default();
        let idx = build_index(THREE, &small_config(), &e).unwrap();
        let text = idx.chunks()[2].text.clone();
        let res = retrieve(&idx, &text, 10, &e).unwrap();
        assert_eq!(res.len(), 3);
        assert_eq!(res[0].chunk.id, 2);
        assert!((res[0].score - 1.0).abs() < 1e-9);
        assert!(matches!(retrieve(&idx, "x", 0, &e), Err(CorpusError::InvalidK(0))));
    }

    #[test]
    fn identical_chunks_tie_by_id() {
        let e = HashEmbedder::default();
        let raw = "kula kula yam. ".repeat(8);
        let idx = build_index(&raw, &IndexConfig { chunk: ChunkConfig::new(15, 0), ..Default::default() }, &e).unwrap();
        let res = retrieve(&idx, "kula", 100, &e).unwrap();
        let ids: Vec<_> = res.iter().map(|r| r.chunk.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn rejects_other_format_versions() {
        let idx = build_index(THREE, &small_config(), &HashEmbedder::default()).unwrap();
        let text = String::from_utf8(idx.to_bytes()).unwrap().replacen("\"format_version\":1", "\"format_version\":9", 1);
        assert!(matches!(
            CorpusIndex::from_bytes(text.as_bytes()),
            Err(CorpusError::UnsupportedFormat { found: 9, expected: 1 })
        ));
    }
}

//! Chunk, embed and index the bundled corpus, then run a few queries.

use fieldwork::assets::{GLOSSARY, SAMPLE_CORPUS};
use fieldwork::corpus::{build_index, parse_glossary, retrieve, HashEmbedder, IndexConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let embedder = HashEmbedder::default();
    let mut config = IndexConfig::default();
    config.lexicon.glossary = parse_glossary(GLOSSARY)?;
    let index = build_index(SAMPLE_CORPUS, &config, &embedder)?;
    println!("{} chunks, {} native terms, embedder {}", index.chunks().len(), index.lexicon().len(), index.embedder());

    for query in ["How are the canoes built?", "garden magic", "what travels along the ring"] {
        println!("\n> {query}");
        for r in retrieve(&index, query, 3, &embedder)? {
            let head: String = r.chunk.text.split_whitespace().collect::<Vec<_>>().join(" ").chars().take(70).collect();
            println!("  #{:<3} {:.3}  {head}...", r.chunk.id, r.score);
        }
    }
    Ok(())
}

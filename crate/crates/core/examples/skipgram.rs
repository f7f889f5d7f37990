//! Trains subword skipgram vectors on a synthetic corpus and prints the
//! nearest neighbours of a few frequent words.
//!
//! cargo run --release --example skipgram [docs] [epochs]

use std::time::Instant;

use xlingual::embedding::{train_skipgram, SkipgramConfig};
use xlingual::eval::{generate_synthetic_bilingual, SynthConfig};
use xlingual::matrix::{dot, norm};
use xlingual::vocab::SubwordIndex;

fn main() -> xlingual::Result<()> {
    let mut args = std::env::args().skip(1);
    let docs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3334);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let data = generate_synthetic_bilingual(
        &SynthConfig {
            source_docs: docs,
            target_docs: 1,
            ..SynthConfig::default()
        },
        0,
    )?;
    let corpus: Vec<Vec<&str>> = data.source.iter().map(|d| d.tokens()).collect();
    let config = SkipgramConfig {
        epochs,
        subsample_t: 1e-3,
        window: 2,
        subwords: SubwordIndex::new(3, 6, 200_000)?,
        ..SkipgramConfig::default()
    };
    let start = Instant::now();
    let model = train_skipgram(&corpus, &config)?;
    let vectors = model.word_vectors();
    println!("{} words, dim {}, trained in {:.1?}", vectors.len(), vectors.dim(), start.elapsed());

    let cos = |a: &[f64], b: &[f64]| dot(a, b) / (norm(a) * norm(b)).max(1e-12);
    for i in 0..5.min(vectors.len()) {
        let query = vectors.vector(i);
        let mut scored: Vec<(f64, usize)> = (0..vectors.len())
            .filter(|&j| j != i)
            .map(|j| (cos(query, vectors.vector(j)), j))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let near: Vec<String> = scored[..5].iter().map(|&(c, j)| format!("{} {c:.2}", vectors.word(j))).collect();
        println!("{}: {}", vectors.word(i), near.join(", "));
    }
    // vectors for unseen words come from their character n-grams
    let probe = format!("{}x", vectors.word(0));
    println!("{probe}: cosine to {} is {:.2}", vectors.word(0), cos(&model.word_vector(&probe), vectors.vector(0)));
    Ok(())
}

//! Trains skipgram embeddings on two synthetic twin languages (the target
//! vocabulary is a renaming of the source one, its documents are sampled
//! independently), aligns them
//! from a 500-pair seed dictionary with five refinement rounds and reports
//! translation precision@1 on 200 held-out pairs.
//!
//! cargo run --release --example twin_alignment [seed]

use std::time::Instant;

use xlingual::align::{refine, RefineConfig};
use xlingual::embedding::{train_skipgram, SkipgramConfig};
use xlingual::eval::{generate_synthetic_bilingual, SynthConfig};
use xlingual::vocab::SubwordIndex;

fn main() -> xlingual::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let start = Instant::now();

    // about 200k tokens per language, no class signal
    let synth = SynthConfig {
        signal_words: 0,
        signal_rate: 0.0,
        source_docs: 3334,
        target_docs: 3334,
        ..SynthConfig::default()
    };
    let data = generate_synthetic_bilingual(&synth, seed)?;
    // 2,000 words sit far above t = 1e-4, which would discard most tokens
    let skipgram = SkipgramConfig {
        epochs: 10,
        subsample_t: 1e-3,
        window: 2,
        subwords: SubwordIndex::new(3, 6, 200_000)?,
        seed,
        ..SkipgramConfig::default()
    };
    let source_docs: Vec<Vec<&str>> = data.source.iter().map(|d| d.tokens()).collect();
    let target_docs: Vec<Vec<&str>> = data.target.iter().map(|d| d.tokens()).collect();
    let source = train_skipgram(&source_docs, &skipgram)?.word_vectors();
    let target = train_skipgram(&target_docs, &skipgram)?.word_vectors();
    println!("vocabularies: {} source, {} target ({:.1?})", source.len(), target.len(), start.elapsed());

    let (seed_dict, eval_dict) = data.split_dictionary(500, 200, seed)?;
    let alignment = refine(&source, &target, &seed_dict, &RefineConfig::default(), Some(&eval_dict))?;
    for step in &alignment.steps {
        println!(
            "iteration {}: {} pairs, precision@1 {:.3}",
            step.iteration,
            step.dictionary_size,
            step.precision_at_1.unwrap_or(f64::NAN)
        );
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}

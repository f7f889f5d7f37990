//! The full cross-lingual experiment on synthetic data: embeddings for both
//! languages, alignment from a seed dictionary, then monolingual and
//! transfer learning curves on the low-resource target language.
//!
//! cargo run --release --example transfer_curve [seed]
//!
//! Takes a few minutes on one core.

use std::time::Instant;

use xlingual::align::{refine, RefineConfig};
use xlingual::classifier::SupervisedConfig;
use xlingual::corpus::{split, AccountDocument, SplitSpec};
use xlingual::embedding::{train_skipgram, SkipgramConfig};
use xlingual::eval::{generate_synthetic_bilingual, learning_curve, CurveConfig, SynthConfig};
use xlingual::transfer::{pretrained_target_vectors, TransferVectors};
use xlingual::vocab::SubwordIndex;

fn main() -> xlingual::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let start = Instant::now();
    let data = generate_synthetic_bilingual(&SynthConfig::default(), seed)?;
    let skipgram = |epochs| -> xlingual::Result<SkipgramConfig> {
        Ok(SkipgramConfig {
            epochs,
            subsample_t: 1e-3,
            window: 2,
            subwords: SubwordIndex::new(3, 6, 200_000)?,
            seed,
            ..SkipgramConfig::default()
        })
    };
    let source = train_skipgram(&tokens(&data.source), &skipgram(10)?)?.word_vectors();
    // the small target corpus needs more passes
    let target = train_skipgram(&tokens(&data.target), &skipgram(50)?)?.word_vectors();

    let (seed_dict, eval_dict) = data.split_dictionary(500, 200, seed)?;
    let alignment = refine(&source, &target, &seed_dict, &RefineConfig::default(), Some(&eval_dict))?;
    let p1 = alignment.steps.last().and_then(|s| s.precision_at_1).unwrap_or(f64::NAN);
    println!("alignment precision@1 {p1:.3} ({:.0?})", start.elapsed());

    let pretrained = pretrained_target_vectors(&source, &target, &alignment.map, TransferVectors::Translated, 10)?;
    let (train, test) = split(&data.target, SplitSpec { seed, ..SplitSpec::default() })?;
    let config = CurveConfig {
        classifier: SupervisedConfig { subwords: SubwordIndex::new(3, 6, 200_000)?, ..SupervisedConfig::default() },
        ..CurveConfig::default()
    };
    let curve = learning_curve(&train, &test, Some(&pretrained), &config)?;
    println!("fraction  kind         F1     [min, max]");
    for m in &curve.means {
        println!("{:<9} {:<12} {:.3}  [{:.3}, {:.3}]", m.train_fraction, m.kind.as_str(), m.f1, m.f1_min, m.f1_max);
    }
    println!("total {:.0?}", start.elapsed());
    Ok(())
}

fn tokens(docs: &[AccountDocument]) -> Vec<Vec<&str>> {
    docs.iter().map(|d| d.tokens()).collect()
}

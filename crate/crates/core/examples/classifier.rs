//! Trains the averaged-embedding text classifier on synthetic accounts and
//! scores it on held-out ones.
//!
//! cargo run --release --example classifier [epochs]

use xlingual::classifier::{train_supervised, SupervisedConfig};
use xlingual::corpus::{split, SplitSpec};
use xlingual::eval::{evaluate_classifier, generate_synthetic_bilingual, labeled_tokens, SynthConfig};
use xlingual::vocab::SubwordIndex;

fn main() -> xlingual::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let data = generate_synthetic_bilingual(&SynthConfig { source_docs: 2000, target_docs: 1, ..SynthConfig::default() }, 0)?;
    let (train, test) = split(&data.source, SplitSpec::default())?;
    let config = SupervisedConfig {
        epochs,
        subwords: SubwordIndex::new(3, 6, 200_000)?,
        ..SupervisedConfig::default()
    };
    let model = train_supervised(&labeled_tokens(&train), &config, None)?;
    let m = evaluate_classifier(&model, &test)?;
    println!("{} train / {} test accounts, {} epochs", train.len(), test.len(), epochs);
    println!("precision {:.3} recall {:.3} F1 {:.3}", m.precision, m.recall, m.f1);

    let probe = test.iter().find(|d| d.label.is_positive()).expect("a suspended account");
    let p = model.predict(&probe.tokens());
    println!("{}: p(Suspended) = {:.3}", probe.account_id, p.positive_probability());
    Ok(())
}

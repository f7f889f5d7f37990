//! Sparse bag-of-words and n-gram baselines with L2 logistic regression.
//!
//! cargo run --release --example baselines [tfidf epochs]

use xlingual::baselines::{predict_logreg, train_logreg, BaselineKind, FeatureVocabulary, LogRegConfig};
use xlingual::corpus::{split, Label, SplitSpec};
use xlingual::eval::{binary_metrics, confusion, generate_synthetic_bilingual, SynthConfig};

fn main() -> xlingual::Result<()> {
    let tfidf_epochs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let data = generate_synthetic_bilingual(&SynthConfig { source_docs: 1500, target_docs: 1, ..SynthConfig::default() }, 0)?;
    let (train, test) = split(&data.source, SplitSpec::default())?;
    let train_tokens: Vec<Vec<&str>> = train.iter().map(|d| d.tokens()).collect();
    let test_tokens: Vec<Vec<&str>> = test.iter().map(|d| d.tokens()).collect();
    let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
    let actual: Vec<Label> = test.iter().map(|d| d.label).collect();

    for kind in BaselineKind::ALL {
        let (lo, hi) = kind.ngram_range();
        let vocab = FeatureVocabulary::build(&train_tokens, lo, hi, 35_000)?;
        let xs = vocab.vectorize_all(&train_tokens, kind.uses_tfidf())?;
        // tf-idf values are small and full-batch descent needs many more steps on them
        let epochs = if kind.uses_tfidf() { tfidf_epochs } else { 200 };
        let config = LogRegConfig { l2_lambda: 1e-4, lr: 4.0, epochs, ..LogRegConfig::default() };
        let model = train_logreg(&xs, &labels, vocab.len(), &config)?;
        let predicted: Vec<Label> = vocab
            .vectorize_all(&test_tokens, kind.uses_tfidf())?
            .iter()
            .map(|x| predict_logreg(&model, x).0)
            .collect();
        let m = binary_metrics(&confusion(&predicted, &actual)?);
        println!("{:<13} {:>6} features  P {:.3}  R {:.3}  F1 {:.3}", kind.as_str(), vocab.len(), m.precision, m.recall, m.f1);
    }
    Ok(())
}

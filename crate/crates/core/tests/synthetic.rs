//! Calibration of the synthetic generator's default signal strength.

use xlingual::classifier::{train_supervised, SupervisedConfig};
use xlingual::corpus::{split, SplitSpec};
use xlingual::eval::{chance_f1, evaluate_classifier, generate_synthetic_bilingual, labeled_tokens, SynthConfig};
use xlingual::vocab::SubwordIndex;

fn classifier() -> SupervisedConfig {
    SupervisedConfig {
        subwords: SubwordIndex::new(3, 6, 200_000).unwrap(),
        ..SupervisedConfig::default()
    }
}

#[test]
fn no_lift_gives_chance_level_f1() {
    let (mut f1, mut chance) = (0.0, 0.0);
    for seed in 0..5 {
        let synth = SynthConfig {
            signal_lift: 1.0,
            source_docs: 10,
            ..SynthConfig::default()
        };
        let data = generate_synthetic_bilingual(&synth, seed).unwrap();
        let (train, test) = split(&data.target, SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        let model = train_supervised(&labeled_tokens(&train), &SupervisedConfig { seed, ..classifier() }, None).unwrap();
        let m = evaluate_classifier(&model, &test).unwrap();
        let n = test.len() as f64;
        let pi = test.iter().filter(|d| d.label.is_positive()).count() as f64 / n;
        let q = (m.confusion.tp + m.confusion.fp) as f64 / n;
        f1 += m.f1 / 5.0;
        chance += chance_f1(pi, q) / 5.0;
    }
    assert!((f1 - chance).abs() <= 0.05, "mean F1 {f1:.3} vs chance {chance:.3}");
}

#[test]
fn default_signal_is_learnable_on_full_source_data() {
    let data = generate_synthetic_bilingual(&SynthConfig { target_docs: 10, ..SynthConfig::default() }, 0).unwrap();
    let (train, test) = split(&data.source, SplitSpec::default()).unwrap();
    let model = train_supervised(&labeled_tokens(&train), &classifier(), None).unwrap();
    let m = evaluate_classifier(&model, &test).unwrap();
    assert!(m.f1 >= 0.9, "source F1 {:.3}", m.f1);
}

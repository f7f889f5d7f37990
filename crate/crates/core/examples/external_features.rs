//! Imports a precomputed per-account feature table and trains a softmax
//! head on it with Adam.
//!
//! cargo run --example external_features

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlingual::classifier::{import_external_features, train_softmax_head, AdamConfig, FeatureTable};
use xlingual::corpus::Label;

fn main() -> xlingual::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut table = FeatureTable::new(4);
    let mut accounts = Vec::new();
    for i in 0..400 {
        let label = Label::from(rng.random_bool(0.3));
        let shift = if label.is_positive() { 0.8 } else { -0.8 };
        let x: Vec<f64> = (0..4).map(|j| rng.random_range(-1.0..1.0) + if j == 0 { shift } else { 0.0 }).collect();
        table.push(format!("acct_{i}"), &x)?;
        accounts.push((format!("acct_{i}"), label));
    }
    let mut text = Vec::new();
    table.save(&mut text)?;
    let table = FeatureTable::load(&text[..])?;

    let data = import_external_features(&table, &accounts)?;
    let (train, test) = data.split_at(300);
    let head = train_softmax_head(train, &AdamConfig { lr: 0.01, ..AdamConfig::default() })?;
    let correct = test.iter().filter(|(x, y)| head.predict(x).label == *y).count();
    println!("train loss {:.4}, test accuracy {}/{}", head.mean_loss(train), correct, test.len());
    Ok(())
}

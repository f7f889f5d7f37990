//! Character n-grams of a word and the hashed rows they map to.
//!
//! cargo run --example subwords [word]

use xlingual::vocab::SubwordIndex;

fn main() -> xlingual::Result<()> {
    let word = std::env::args().nth(1).unwrap_or_else(|| "where".to_string());
    let index = SubwordIndex::new(3, 6, 2_000_000)?;
    let grams = index.subwords(&word);
    let len = word.chars().count();
    let formula: usize = (3..=6).map(|n| (len + 3).saturating_sub(n)).sum();
    println!("<{word}> has {} n-grams of length 3..6 (formula gives {formula})", grams.len());
    for g in &grams {
        println!("  {g:<8} bucket {}", index.bucket(g));
    }
    Ok(())
}

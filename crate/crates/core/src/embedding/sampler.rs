use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Draws negative words with probability proportional to `count^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
    len: usize,
}

pub const NEGATIVE_POWER: f64 = 0.75;

impl NegativeSampler {
    pub fn new(vocab: &Vocabulary) -> Result<Self> {
        Self::from_counts(vocab.iter().map(|(_, c)| c))
    }

    pub fn from_counts(counts: impl IntoIterator<Item = u64>) -> Result<Self> {
        let weights: Vec<f64> = counts.into_iter().map(|c| (c as f64).powf(NEGATIVE_POWER)).collect();
        let len = weights.len();
        let dist = WeightedIndex::new(weights)
            .map_err(|e| Error::invalid(format!("cannot build negative sampler: {e}")))?;
        Ok(NegativeSampler { dist, len })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    /// Draws a word different from `avoid` (unless the vocabulary has a
    /// single word, in which case that word is returned).
    #[inline]
    pub fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, avoid: usize) -> usize {
        if self.len == 1 {
            return 0;
        }
        loop {
            let w = self.sample(rng);
            if w != avoid {
                return w;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

//! Unsupervised subword skipgram embeddings.
//!
//! A word's vector is the mean of its vocabulary row and the hashed rows of
//! its character n-grams; out-of-vocabulary words are composed from their
//! n-gram rows alone.
//!
//! Trained models persist either as composed word vectors (the text format
//! in [`WordVectors`]) or as a full `XLEMB1` checkpoint: the magic bytes,
//! then little-endian `u64` dim / bucket count / `n_min` / `n_max`, the
//! vocabulary, and finally the input and context tables as little-endian
//! `f32` rows in id order.

mod sampler;
mod skipgram;
mod vectors;

use std::io::{Read, Write};

pub use sampler::{NegativeSampler, NEGATIVE_POWER};
pub use skipgram::{
    accumulate_pair, discard_probability, linear_lr, log_sigmoid, pair_objective_and_grad, sigmoid,
    train_skipgram, EvaluationSample, PairGradient, DIVERGENCE_LIMIT,
};
pub use vectors::WordVectors;

pub(crate) use skipgram::{initial_input, shard, worker_seed};

use crate::binio;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::vocab::{SubwordIndex, Vocabulary};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"XLEMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramConfig {
    pub dim: usize,
    pub epochs: usize,
    /// Decays linearly to zero over all scheduled updates.
    pub initial_lr: f64,
    /// Maximum context radius; each center samples its radius from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub subsample_t: f64,
    pub min_count: u64,
    pub subwords: SubwordIndex,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 100,
            epochs: 5,
            initial_lr: 0.05,
            window: 5,
            negatives: 5,
            subsample_t: 1e-4,
            min_count: 5,
            subwords: SubwordIndex::default(),
            seed: 0,
            workers: 1,
        }
    }
}

impl SkipgramConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.dim == 0 {
            errs.push("dim must be >= 1".to_string());
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            errs.push(format!("initial_lr must be positive, got {}", self.initial_lr));
        }
        if self.window == 0 {
            errs.push("window must be >= 1".into());
        }
        if self.negatives == 0 {
            errs.push("negatives must be >= 1".into());
        }
        if !(self.subsample_t > 0.0) {
            errs.push(format!("subsample_t must be positive, got {}", self.subsample_t));
        }
        if self.min_count == 0 {
            errs.push("min_count must be >= 1".into());
        }
        if self.workers == 0 {
            errs.push("workers must be >= 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Input rows (`|V| + buckets`) and context rows (`|V|`) of a skipgram model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    subwords: SubwordIndex,
    input: Matrix<f32>,
    context: Matrix<f32>,
}

impl EmbeddingModel {
    pub fn new(vocab: Vocabulary, subwords: SubwordIndex, input: Matrix<f32>, context: Matrix<f32>) -> Self {
        assert_eq!(input.rows(), subwords.input_rows(&vocab));
        assert_eq!(context.rows(), vocab.len());
        assert_eq!(input.cols(), context.cols());
        EmbeddingModel {
            vocab,
            subwords,
            input,
            context,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn subwords(&self) -> &SubwordIndex {
        &self.subwords
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn input(&self) -> &Matrix<f32> {
        &self.input
    }

    pub fn input_mut(&mut self) -> &mut Matrix<f32> {
        &mut self.input
    }

    pub fn context(&self) -> &Matrix<f32> {
        &self.context
    }

    pub fn is_finite(&self) -> bool {
        self.input.is_finite() && self.context.is_finite()
    }

    /// Mean of the word's input rows, accumulated in `f64` in ascending row
    /// order.
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        let mut rows = self.subwords.input_ids(word, &self.vocab);
        let mut out = vec![0f64; self.dim()];
        if rows.is_empty() {
            return out;
        }
        rows.sort_unstable();
        for &r in &rows {
            for (o, &x) in out.iter_mut().zip(self.input.row(r)) {
                *o += f64::from(x);
            }
        }
        let n = rows.len() as f64;
        out.iter_mut().for_each(|x| *x /= n);
        out
    }

    /// Composed vectors for every vocabulary word, in id order.
    pub fn word_vectors(&self) -> WordVectors {
        let mut out = WordVectors::new(self.dim());
        for (word, _) in self.vocab.iter() {
            out.push(word, &self.word_vector(word))
                .expect("vocabulary words are distinct");
        }
        out
    }

    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        binio::write_magic(&mut w, CHECKPOINT_MAGIC)?;
        binio::write_u64(&mut w, self.dim() as u64)?;
        binio::write_u64(&mut w, u64::from(self.subwords.buckets()))?;
        binio::write_u64(&mut w, self.subwords.n_min() as u64)?;
        binio::write_u64(&mut w, self.subwords.n_max() as u64)?;
        binio::write_vocab(&mut w, &self.vocab)?;
        binio::write_matrix(&mut w, &self.input)?;
        binio::write_matrix(&mut w, &self.context)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        binio::expect_magic(&mut r, CHECKPOINT_MAGIC)?;
        let dim = binio::read_usize(&mut r, "dim", 1 << 16)?;
        let buckets = binio::read_usize(&mut r, "bucket count", u32::MAX as u64)? as u32;
        let n_min = binio::read_usize(&mut r, "n_min", 64)?;
        let n_max = binio::read_usize(&mut r, "n_max", 64)?;
        let subwords = SubwordIndex::new(n_min, n_max, buckets)?;
        let vocab = binio::read_vocab(&mut r)?;
        let input = binio::read_matrix(&mut r, subwords.input_rows(&vocab), dim)?;
        let context = binio::read_matrix(&mut r, vocab.len(), dim)?;
        binio::expect_eof(&mut r)?;
        Ok(EmbeddingModel::new(vocab, subwords, input, context))
    }
}

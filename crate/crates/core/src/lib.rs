//! Cross-lingual detection of suspended accounts from aggregated post text.
//!
//! The pipeline: aggregate posts into per-account [`corpus::AccountDocument`]s,
//! train subword skipgram embeddings for a high-resource source language and
//! a low-resource target language ([`embedding`]), align the two spaces with
//! an orthogonal map fitted on a seed dictionary ([`align`]), and train
//! averaged-embedding softmax classifiers on the target language, either
//! from scratch or initialized from the aligned vectors ([`classifier`]).
//! Sparse bag-of-words baselines live in [`baselines`]; metrics, learning
//! curves and a synthetic bilingual generator in [`eval`].

mod binio;
pub mod align;
pub mod baselines;
pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod transfer;
pub mod vocab;

pub use error::{Error, Result};

//! Averaged-embedding text classifier with a linear softmax head.
//!
//! A document is the mean of the input rows of all its tokens (word row plus
//! hashed subword rows, and optional hashed word n-grams); the two-class
//! softmax over `output · h` gives the label distribution. Class 1 is
//! `Suspended` everywhere.

mod external;

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use external::{import_external_features, train_softmax_head, AdamConfig, FeatureTable, SoftmaxHead};

use crate::binio;
use crate::corpus::Label;
use crate::embedding::{initial_input, linear_lr, shard, worker_seed, WordVectors};
use crate::error::{Error, Result};
use crate::matrix::{mean_rows, LocalMatrix, Matrix, RowStore, SharedMatrix};
use crate::vocab::{hash_subword, SubwordIndex, Vocabulary};

pub const MODEL_MAGIC: &[u8; 6] = b"XLCLF1";
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedConfig {
    pub dim: usize,
    /// Zero epochs builds the initialized model only.
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub word_ngrams: usize,
    pub subwords: SubwordIndex,
    /// Keep pretrained word rows fixed during training.
    pub freeze_pretrained: bool,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        SupervisedConfig {
            dim: 100,
            epochs: 100,
            initial_lr: 1.0,
            min_count: 1,
            word_ngrams: 1,
            subwords: SubwordIndex::default(),
            freeze_pretrained: false,
            seed: 0,
            workers: 1,
        }
    }
}

impl SupervisedConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.dim == 0 {
            errs.push("dim must be >= 1".to_string());
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            errs.push(format!("initial_lr must be positive, got {}", self.initial_lr));
        }
        if self.min_count == 0 {
            errs.push("min_count must be >= 1".into());
        }
        if self.word_ngrams == 0 {
            errs.push("word_ngrams must be >= 1".into());
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

/// Loss and gradients of the softmax head for one hidden vector.
#[derive(Debug, Clone)]
pub struct HeadGradient<T> {
    pub loss: T,
    pub probabilities: Vec<T>,
    /// `(p − onehot(label)) · hᵀ`
    pub output: Matrix<T>,
    /// `outputᵀ · (p − onehot(label))`
    pub hidden: Vec<T>,
}

/// Numerically stable softmax.
pub fn softmax<T: Float>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy `−ln p[label]` for `p = softmax(output · hidden)`.
pub fn softmax_head<T: Float>(output: &Matrix<T>, hidden: &[T], label: usize) -> HeadGradient<T> {
    let logits = output.mul_vec(hidden);
    let probs = softmax(&logits);
    // log-sum-exp form keeps the loss finite for saturated logits
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + logits.iter().fold(T::zero(), |a, &z| a + (z - max).exp()).ln();
    let loss = lse - logits[label];
    let delta: Vec<T> = probs
        .iter()
        .enumerate()
        .map(|(c, &p)| if c == label { p - T::one() } else { p })
        .collect();
    let grad_output = Matrix::from_fn(output.rows(), hidden.len(), |c, j| delta[c] * hidden[j]);
    let grad_hidden = output.tmul_vec(&delta);
    HeadGradient {
        loss,
        probabilities: probs,
        output: grad_output,
        hidden: grad_hidden,
    }
}

/// Loss with gradients for the output matrix, the hidden vector, and each
/// distinct contributing input row (`∂h/∂row = multiplicity / n`).
#[derive(Debug, Clone)]
pub struct LossGradient<T> {
    pub loss: T,
    pub output: Matrix<T>,
    pub hidden: Vec<T>,
    pub rows: Vec<(usize, Vec<T>)>,
}

pub fn loss_and_grad_rows<T: Float>(input: &Matrix<T>, output: &Matrix<T>, rows: &[usize], label: usize) -> LossGradient<T> {
    let hidden = mean_rows(input, rows);
    let head = softmax_head(output, &hidden, label);
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    let n = T::from(rows.len().max(1)).unwrap();
    let mut row_grads: Vec<(usize, Vec<T>)> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let r = sorted[i];
        let mut mult = 0usize;
        while i < sorted.len() && sorted[i] == r {
            mult += 1;
            i += 1;
        }
        let scale = T::from(mult).unwrap() / n;
        row_grads.push((r, head.hidden.iter().map(|&g| g * scale).collect()));
    }
    LossGradient {
        loss: head.loss,
        output: head.output,
        hidden: head.hidden,
        rows: row_grads,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub probabilities: [f64; NUM_CLASSES],
}

impl Prediction {
    /// Ties go to the negative class.
    pub fn from_probabilities(probabilities: [f64; NUM_CLASSES]) -> Self {
        Prediction {
            label: Label::from(probabilities[1] > probabilities[0]),
            probabilities,
        }
    }

    pub fn positive_probability(&self) -> f64 {
        self.probabilities[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier {
    vocab: Vocabulary,
    subwords: SubwordIndex,
    word_ngrams: usize,
    input: Matrix<f32>,
    output: Matrix<f32>,
}

impl TextClassifier {
    pub fn new(vocab: Vocabulary, subwords: SubwordIndex, word_ngrams: usize, input: Matrix<f32>, output: Matrix<f32>) -> Result<Self> {
        if input.rows() != subwords.input_rows(&vocab) {
            return Err(Error::invalid(format!(
                "input table has {} rows, expected {}",
                input.rows(),
                subwords.input_rows(&vocab)
            )));
        }
        if output.rows() != NUM_CLASSES || output.cols() != input.cols() {
            return Err(Error::invalid(format!(
                "output weights must be {NUM_CLASSES}x{}, got {}x{}",
                input.cols(),
                output.rows(),
                output.cols()
            )));
        }
        Ok(TextClassifier {
            vocab,
            subwords,
            word_ngrams,
            input,
            output,
        })
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

    pub fn output(&self) -> &Matrix<f32> {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut Matrix<f32> {
        &mut self.output
    }

    pub fn input_mut(&mut self) -> &mut Matrix<f32> {
        &mut self.input
    }

    pub fn label_names(&self) -> [&'static str; NUM_CLASSES] {
        Label::NAMES
    }

    /// Input rows contributed by a token sequence, with multiplicity.
    pub fn contributions<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        contributions(&self.vocab, &self.subwords, self.word_ngrams, tokens)
    }

    /// Mean of all contributing rows; zero when nothing contributes.
    pub fn doc_embedding<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f32> {
        mean_rows(&self.input, &self.contributions(tokens))
    }

    pub fn predict<S: AsRef<str>>(&self, tokens: &[S]) -> Prediction {
        let rows = self.contributions(tokens);
        let hidden: Vec<f64> = mean_rows(&self.input, &rows).into_iter().map(f64::from).collect();
        let output = self.output.map(f64::from);
        let p = softmax(&output.mul_vec(&hidden));
        Prediction::from_probabilities([p[0], p[1]])
    }

    pub fn loss_and_grad<S: AsRef<str>>(&self, tokens: &[S], label: Label) -> LossGradient<f64> {
        loss_and_grad_rows(
            &self.input.map(f64::from),
            &self.output.map(f64::from),
            &self.contributions(tokens),
            label.index(),
        )
    }

    /// Mean cross-entropy over labeled documents.
    pub fn mean_loss<D: AsRef<[S]>, S: AsRef<str>>(&self, docs: &[(D, Label)]) -> f64 {
        let total: f64 = docs
            .iter()
            .map(|(tokens, label)| -self.predict(tokens.as_ref()).probabilities[label.index()].max(f64::MIN_POSITIVE).ln())
            .sum();
        total / docs.len().max(1) as f64
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        binio::write_magic(&mut w, MODEL_MAGIC)?;
        binio::write_u64(&mut w, self.dim() as u64)?;
        binio::write_u64(&mut w, self.vocab.len() as u64)?;
        binio::write_u64(&mut w, u64::from(self.subwords.buckets()))?;
        binio::write_u64(&mut w, NUM_CLASSES as u64)?;
        for name in Label::NAMES {
            binio::write_str(&mut w, name)?;
        }
        binio::write_u64(&mut w, self.subwords.n_min() as u64)?;
        binio::write_u64(&mut w, self.subwords.n_max() as u64)?;
        binio::write_u64(&mut w, self.word_ngrams as u64)?;
        binio::write_vocab(&mut w, &self.vocab)?;
        binio::write_matrix(&mut w, &self.input)?;
        binio::write_matrix(&mut w, &self.output)?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        binio::expect_magic(&mut r, MODEL_MAGIC)?;
        let dim = binio::read_usize(&mut r, "dim", 1 << 16)?;
        let vocab_len = binio::read_usize(&mut r, "vocabulary size", 1 << 32)?;
        let buckets = binio::read_usize(&mut r, "bucket count", u32::MAX as u64)? as u32;
        let classes = binio::read_usize(&mut r, "class count", 16)?;
        if classes != NUM_CLASSES {
            return Err(Error::format(format!("expected {NUM_CLASSES} classes, found {classes}")));
        }
        for expected in Label::NAMES {
            let name = binio::read_str(&mut r)?;
            if name != expected {
                return Err(Error::format(format!("label name {name:?} where {expected:?} was expected")));
            }
        }
        let n_min = binio::read_usize(&mut r, "n_min", 64)?;
        let n_max = binio::read_usize(&mut r, "n_max", 64)?;
        let word_ngrams = binio::read_usize(&mut r, "word_ngrams", 64)?;
        let subwords = SubwordIndex::new(n_min, n_max, buckets)?;
        let vocab = binio::read_vocab(&mut r)?;
        if vocab.len() != vocab_len {
            return Err(Error::format("vocabulary size does not match header"));
        }
        let input = binio::read_matrix(&mut r, subwords.input_rows(&vocab), dim)?;
        let output = binio::read_matrix(&mut r, NUM_CLASSES, dim)?;
        binio::expect_eof(&mut r)?;
        TextClassifier::new(vocab, subwords, word_ngrams, input, output)
    }
}

pub(crate) fn contributions<S: AsRef<str>>(vocab: &Vocabulary, subwords: &SubwordIndex, word_ngrams: usize, tokens: &[S]) -> Vec<usize> {
    let mut rows = Vec::new();
    for t in tokens {
        rows.extend(subwords.input_ids(t.as_ref(), vocab));
    }
    let offset = vocab.len();
    for n in 2..=word_ngrams {
        for window in tokens.windows(n) {
            let gram = window.iter().map(|t| t.as_ref()).collect::<Vec<_>>().join(" ");
            rows.push(offset + hash_subword(&gram, subwords.buckets()) as usize);
        }
    }
    rows
}

/// Training-text vocabulary, extended by every pretrained word: each
/// pretrained word adds one to its count and is kept regardless of
/// `min_count`, so words never seen in the labeled text still get a row.
fn supervised_vocabulary<D, S>(docs: &[(D, Label)], min_count: u64, pretrained: Option<&WordVectors>) -> Result<Vocabulary>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    let Some(pre) = pretrained else {
        return Vocabulary::build(docs.iter().map(|(t, _)| t.as_ref().iter()), min_count);
    };
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut total = 0u64;
    for (tokens, _) in docs {
        for t in tokens.as_ref() {
            *counts.entry(t.as_ref()).or_insert(0) += 1;
            total += 1;
        }
    }
    let mut words: Vec<(String, u64)> = counts
        .iter()
        .filter(|&(w, &c)| c >= min_count || pre.id(w).is_some())
        .map(|(w, &c)| (w.to_string(), c + u64::from(pre.id(w).is_some())))
        .collect();
    for w in pre.words() {
        if !counts.contains_key(w.as_str()) {
            words.push((w.clone(), 1));
        }
    }
    Vocabulary::from_counts(words, 1, total)
}

struct TrainState<'a, M> {
    docs: &'a [(Vec<usize>, usize)],
    input: &'a M,
    output: &'a M,
    frozen: &'a [bool],
    progress: AtomicU64,
    total: u64,
    initial_lr: f64,
    epochs: usize,
}

fn train_worker<M: RowStore>(state: &TrainState<'_, M>, order: &[usize], seed: u64) -> Result<()> {
    let dim = state.input.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = order.to_vec();
    let mut hidden = vec![0f32; dim];
    let mut output = Matrix::<f32>::zeros(NUM_CLASSES, dim);
    for epoch in 0..state.epochs {
        order.shuffle(&mut rng);
        for &d in &order {
            let step = state.progress.fetch_add(1, Ordering::Relaxed);
            let lr = linear_lr(state.initial_lr, step, state.total) as f32;
            let (rows, label) = &state.docs[d];
            if rows.is_empty() {
                continue;
            }
            hidden.fill(0.0);
            state.input.accumulate_rows(rows, &mut hidden);
            let inv = 1.0 / rows.len() as f32;
            hidden.iter_mut().for_each(|h| *h *= inv);
            for c in 0..NUM_CLASSES {
                state.output.read_row(c, output.row_mut(c));
            }
            let g = softmax_head(&output, &hidden, *label);
            if !g.loss.is_finite() {
                return Err(Error::Diverged {
                    step,
                    reason: format!("non-finite loss in epoch {epoch}"),
                });
            }
            let mut max_abs = 0f32;
            for c in 0..NUM_CLASSES {
                max_abs = max_abs.max(state.output.add_to_row(c, -lr, g.output.row(c)));
            }
            let row_lr = -lr * inv;
            for &r in rows {
                if !state.frozen.is_empty() && state.frozen[r] {
                    continue;
                }
                max_abs = max_abs.max(state.input.add_to_row(r, row_lr, &g.hidden));
            }
            if max_abs > crate::embedding::DIVERGENCE_LIMIT {
                return Err(Error::Diverged {
                    step,
                    reason: format!("parameter magnitude {max_abs:e}"),
                });
            }
        }
    }
    Ok(())
}

/// Per-document SGD on softmax cross-entropy. When `pretrained` is given,
/// vocabulary rows found in it start from those vectors and bucket rows
/// start at zero; otherwise every input row is drawn uniformly from
/// `[−1/d, 1/d]`. Output weights start at zero.
pub fn train_supervised<D, S>(docs: &[(D, Label)], config: &SupervisedConfig, pretrained: Option<&WordVectors>) -> Result<TextClassifier>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let present: HashSet<Label> = docs.iter().map(|(_, l)| *l).collect();
    for label in [Label::NotSuspended, Label::Suspended] {
        if !present.contains(&label) {
            log::warn!("training data has no {label:?} documents");
        }
    }
    if let Some(p) = pretrained {
        if p.dim() != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                found: p.dim(),
            });
        }
    }
    let vocab = supervised_vocabulary(docs, config.min_count, pretrained)?;
    let n_rows = config.subwords.input_rows(&vocab);
    let mut input = initial_input(n_rows, config.dim, config.seed);
    let mut frozen = Vec::new();
    if let Some(p) = pretrained {
        for r in vocab.len()..n_rows {
            input.row_mut(r).fill(0.0);
        }
        let mut hits = 0usize;
        if config.freeze_pretrained {
            frozen = vec![false; n_rows];
        }
        for (id, (word, _)) in vocab.iter().enumerate() {
            if let Some(v) = p.get(word) {
                for (dst, &src) in input.row_mut(id).iter_mut().zip(v) {
                    *dst = src as f32;
                }
                if config.freeze_pretrained {
                    frozen[id] = true;
                }
                hits += 1;
            }
        }
        log::info!("pretrained vectors cover {hits} of {} vocabulary words", vocab.len());
    }
    let output = Matrix::<f32>::zeros(NUM_CLASSES, config.dim);
    let mut model = TextClassifier::new(vocab, config.subwords, config.word_ngrams, input, output)?;
    if config.epochs == 0 {
        return Ok(model);
    }

    let encoded: Vec<(Vec<usize>, usize)> = docs
        .iter()
        .map(|(t, l)| {
            let mut rows = model.contributions(t.as_ref());
            rows.sort_unstable();
            (rows, l.index())
        })
        .collect();
    let indices: Vec<usize> = (0..docs.len()).collect();
    let parts = shard(&indices, config.workers, |_| 1);
    let total = (config.epochs * docs.len()) as u64;
    if parts.len() == 1 {
        let input = LocalMatrix::from_matrix(&model.input);
        let output = LocalMatrix::from_matrix(&model.output);
        let state = TrainState {
            docs: &encoded,
            input: &input,
            output: &output,
            frozen: &frozen,
            progress: AtomicU64::new(0),
            total,
            initial_lr: config.initial_lr,
            epochs: config.epochs,
        };
        train_worker(&state, parts[0], worker_seed(config.seed, 0))?;
        model.input = input.to_matrix();
        model.output = output.to_matrix();
    } else {
        let input = SharedMatrix::from_matrix(&model.input);
        let output = SharedMatrix::from_matrix(&model.output);
        let state = TrainState {
            docs: &encoded,
            input: &input,
            output: &output,
            frozen: &frozen,
            progress: AtomicU64::new(0),
            total,
            initial_lr: config.initial_lr,
            epochs: config.epochs,
        };
        std::thread::scope(|scope| {
            let handles: Vec<_> = parts
                .iter()
                .enumerate()
                .map(|(w, part)| {
                    let state = &state;
                    scope.spawn(move || train_worker(state, part, worker_seed(config.seed, w)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("classifier worker panicked"))
                .collect::<Result<Vec<()>>>()
        })?;
        model.input = input.to_matrix();
        model.output = output.to_matrix();
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cfg() -> SupervisedConfig {
        SupervisedConfig {
            dim: 8,
            subwords: SubwordIndex::new(3, 6, 500).unwrap(),
            seed: 3,
            ..SupervisedConfig::default()
        }
    }

    fn toy() -> Vec<(Vec<String>, Label)> {
        let mut docs = Vec::new();
        for i in 0..20 {
            docs.push((vec!["aaa".to_string(), format!("n{i}")], Label::NotSuspended));
            docs.push((vec!["bbb".to_string(), format!("p{i}")], Label::Suspended));
        }
        docs
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0f64, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let q = softmax(&[7.0f64, 7.0 + 3f64.ln()]);
        assert!((p[0] - q[0]).abs() < 1e-12);
        let r = softmax(&[-1000.0f64, 1000.0]);
        assert_eq!(r, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_output_predicts_negative_on_tie() {
        let m = train_supervised(&toy(), &SupervisedConfig { epochs: 0, ..cfg() }, None).unwrap();
        let p = m.predict(&["bbb"]);
        assert_eq!(p.probabilities, [0.5, 0.5]);
        assert_eq!(p.label, Label::NotSuspended);
        let g = m.loss_and_grad(&["bbb"], Label::Suspended);
        assert!((g.loss - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_has_zero_gradient() {
        let input = Matrix::from_vec(1, 1, vec![1.0f64]);
        let output = Matrix::from_vec(2, 1, vec![-800.0, 800.0]);
        let g = loss_and_grad_rows(&input, &output, &[0], 1);
        assert_eq!(g.loss, 0.0);
        assert!(g.output.as_slice().iter().all(|&x| x == 0.0));
        assert!(g.hidden.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn doc_embedding_is_arithmetic_mean() {
        let mut m = train_supervised(&toy(), &SupervisedConfig { epochs: 0, dim: 2, subwords: SubwordIndex::new(3, 3, 1).unwrap(), ..cfg() }, None).unwrap();
        // every token contributes its word row and the single bucket row
        let a = m.vocab().id("aaa").unwrap();
        let b = m.vocab().id("bbb").unwrap();
        let bucket = m.vocab().len();
        m.input_mut().row_mut(a).copy_from_slice(&[1.0, 0.0]);
        m.input_mut().row_mut(b).copy_from_slice(&[0.0, 1.0]);
        m.input_mut().row_mut(bucket).copy_from_slice(&[0.0, 0.0]);
        let rows = m.contributions(&["aaa", "bbb"]);
        assert_eq!(rows.len(), 2 + 2 * 3);
        let h = m.doc_embedding(&["aaa", "bbb"]);
        assert_eq!(h, vec![1.0 / 8.0, 1.0 / 8.0]);
        assert_eq!(m.doc_embedding(&[] as &[&str]), vec![0.0, 0.0]);
        assert_eq!(m.doc_embedding(&["bbb", "aaa"]), h);
    }

    #[test]
    fn separable_toy_is_learned() {
        let docs = toy();
        let init = train_supervised(&docs, &SupervisedConfig { epochs: 0, ..cfg() }, None).unwrap();
        let one = train_supervised(&docs, &SupervisedConfig { epochs: 1, ..cfg() }, None).unwrap();
        assert!(one.mean_loss(&docs) < init.mean_loss(&docs));
        let m = train_supervised(&docs, &cfg(), None).unwrap();
        let correct = docs.iter().filter(|(t, l)| m.predict(t).label == *l).count();
        assert_eq!(correct, docs.len());
        assert_eq!(m, train_supervised(&docs, &cfg(), None).unwrap());
    }

    #[test]
    fn word_ngrams_add_rows() {
        let m = train_supervised(&toy(), &SupervisedConfig { epochs: 0, word_ngrams: 2, ..cfg() }, None).unwrap();
        let uni = contributions(m.vocab(), m.subwords(), 1, &["aaa", "bbb", "n1"]);
        assert_eq!(m.contributions(&["aaa", "bbb", "n1"]).len(), uni.len() + 2);
    }

    #[test]
    fn pretrained_initialization() {
        let docs = toy();
        let mut pre = WordVectors::new(8);
        pre.push("aaa", &[0.5; 8]).unwrap();
        pre.push("bbb", &[-0.25; 8]).unwrap();
        pre.push("unused", &[9.0; 8]).unwrap();
        let m = train_supervised(&docs, &SupervisedConfig { epochs: 0, ..cfg() }, Some(&pre)).unwrap();
        let rows = m.contributions(&["aaa", "bbb"]);
        let n = rows.len() as f32;
        // bucket rows are zero, so the mean is the word rows over all rows
        let expected: Vec<f32> = (0..8).map(|_| (0.5f32 + -0.25f32) / n).collect();
        assert_eq!(m.doc_embedding(&["aaa", "bbb"]), expected);
        // pretrained words missing from the training text still get a row
        let unused = m.vocab().id("unused").unwrap();
        assert_eq!(m.input().row(unused), &[9.0f32; 8]);
        assert_eq!(m.vocab().len(), 2 + 40 + 1);

        let wrong = WordVectors::new(5);
        assert!(matches!(
            train_supervised(&docs, &cfg(), Some(&wrong)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frozen_rows_do_not_move() {
        let docs = toy();
        let mut pre = WordVectors::new(8);
        pre.push("aaa", &[0.5; 8]).unwrap();
        let m = train_supervised(&docs, &SupervisedConfig { epochs: 3, freeze_pretrained: true, ..cfg() }, Some(&pre)).unwrap();
        assert_eq!(m.input().row(m.vocab().id("aaa").unwrap()), &[0.5f32; 8]);
        let thawed = train_supervised(&docs, &SupervisedConfig { epochs: 3, ..cfg() }, Some(&pre)).unwrap();
        assert_ne!(thawed.input().row(thawed.vocab().id("aaa").unwrap()), &[0.5f32; 8]);
    }

    #[test]
    fn empty_training_set() {
        let docs: Vec<(Vec<String>, Label)> = Vec::new();
        assert!(train_supervised(&docs, &cfg(), None).is_err());
    }

    #[test]
    fn diverging_lr_is_reported() {
        let r = train_supervised(&toy(), &SupervisedConfig { initial_lr: 1e30, ..cfg() }, None);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }

    #[test]
    fn parallel_training_runs() {
        let m = train_supervised(&toy(), &SupervisedConfig { workers: 3, ..cfg() }, None).unwrap();
        assert!(m.input().is_finite());
    }

    #[test]
    fn model_file_round_trip() {
        let m = train_supervised(&toy(), &SupervisedConfig { epochs: 2, word_ngrams: 2, ..cfg() }, None).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"XLCLF1"));
        assert_eq!(TextClassifier::read(buf.as_slice()).unwrap(), m);
        assert!(TextClassifier::read(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (rows_n, d) = (6, 4);
        let mut input = Matrix::from_fn(rows_n, d, |_, _| rng.random_range(-1.0..1.0));
        let mut output = Matrix::from_fn(2, d, |_, _| rng.random_range(-1.0..1.0));
        let rows = [0, 2, 2, 5];
        let g = loss_and_grad_rows(&input, &output, &rows, 1);
        let eps = 1e-5;
        let loss = |i: &Matrix<f64>, o: &Matrix<f64>| loss_and_grad_rows(i, o, &rows, 1).loss;
        for c in 0..2 {
            for j in 0..d {
                let orig = output.get(c, j);
                output.set(c, j, orig + eps);
                let up = loss(&input, &output);
                output.set(c, j, orig - eps);
                let down = loss(&input, &output);
                output.set(c, j, orig);
                let num = (up - down) / (2.0 * eps);
                assert!((num - g.output.get(c, j)).abs() <= 1e-4 * num.abs().max(g.output.get(c, j).abs()).max(1e-6));
            }
        }
        for (r, grad) in &g.rows {
            for j in 0..d {
                let orig = input.get(*r, j);
                input.set(*r, j, orig + eps);
                let up = loss(&input, &output);
                input.set(*r, j, orig - eps);
                let down = loss(&input, &output);
                input.set(*r, j, orig);
                let num = (up - down) / (2.0 * eps);
                assert!((num - grad[j]).abs() <= 1e-4 * num.abs().max(grad[j].abs()).max(1e-6));
            }
        }
    }
}

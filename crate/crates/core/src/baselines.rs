//! Sparse bag-of-words / bag-of-n-grams baselines with L2 logistic regression.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::Label;
use crate::embedding::sigmoid;
use crate::error::{Error, Result};
use crate::vocab::{read_count_table, write_count_table};

pub const DEFAULT_MAX_FEATURES: usize = 35_000;

/// Contiguous token n-grams of lengths `n_lo..=n_hi`, grouped by length and
/// in order of occurrence within each length.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], n_lo: usize, n_hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in n_lo.max(1)..=n_hi {
        for window in tokens.windows(n) {
            let mut gram = String::new();
            for (i, t) in window.iter().enumerate() {
                if i > 0 {
                    gram.push(' ');
                }
                gram.push_str(t.as_ref());
            }
            out.push(gram);
        }
    }
    out
}

/// Which sparse representation a baseline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Bow,
    BowTfidf,
    Ngrams,
    NgramsTfidf,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [BaselineKind::Bow, BaselineKind::BowTfidf, BaselineKind::Ngrams, BaselineKind::NgramsTfidf];

    pub fn ngram_range(self) -> (usize, usize) {
        match self {
            BaselineKind::Bow | BaselineKind::BowTfidf => (1, 1),
            BaselineKind::Ngrams | BaselineKind::NgramsTfidf => (1, 5),
        }
    }

    pub fn uses_tfidf(self) -> bool {
        matches!(self, BaselineKind::BowTfidf | BaselineKind::NgramsTfidf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Bow => "bow",
            BaselineKind::BowTfidf => "bow-tfidf",
            BaselineKind::Ngrams => "ngrams",
            BaselineKind::NgramsTfidf => "ngrams-tfidf",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown baseline kind {s:?} (expected bow, bow-tfidf, ngrams or ngrams-tfidf)")))
    }
}

/// Sorted `(feature_id, value)` pairs with non-zero values.
pub type SparseVector = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVocabulary {
    /// Feature string and document frequency, in id order.
    features: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    num_docs: u64,
    n_lo: usize,
    n_hi: usize,
}

impl FeatureVocabulary {
    /// Keeps the `max_features` features with the highest document frequency
    /// (ties lexicographic).
    pub fn build<D: AsRef<[S]> + Sync, S: AsRef<str> + Sync>(docs: &[D], n_lo: usize, n_hi: usize, max_features: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("cannot build features from an empty corpus"));
        }
        if n_lo == 0 || n_lo > n_hi {
            return Err(Error::invalid(format!("invalid n-gram range {n_lo}..{n_hi}")));
        }
        let per_doc: Vec<HashSet<String>> = docs
            .par_iter()
            .map(|d| extract_ngrams(d.as_ref(), n_lo, n_hi).into_iter().collect())
            .collect();
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for set in per_doc {
            for g in set {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        let mut features: Vec<(String, u64)> = df.into_iter().collect();
        features.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        features.truncate(max_features);
        Ok(Self::from_parts(features, docs.len() as u64, n_lo, n_hi))
    }

    fn from_parts(features: Vec<(String, u64)>, num_docs: u64, n_lo: usize, n_hi: usize) -> Self {
        let index = features.iter().enumerate().map(|(i, (f, _))| (f.clone(), i)).collect();
        FeatureVocabulary {
            features,
            index,
            num_docs,
            n_lo,
            n_hi,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn id(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn feature(&self, id: usize) -> &str {
        &self.features[id].0
    }

    pub fn document_frequency(&self, id: usize) -> u64 {
        self.features[id].1
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        (self.n_lo, self.n_hi)
    }

    /// Raw in-document counts of retained features.
    pub fn counts<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in extract_ngrams(tokens, self.n_lo, self.n_hi) {
            if let Some(id) = self.id(&g) {
                *counts.entry(id).or_insert(0.0) += 1.0;
            }
        }
        counts.into_iter().collect()
    }

    /// `(count / len(doc)) · ln(N / df)`; zero entries are dropped.
    pub fn tfidf(&self, counts: &SparseVector, doc_len: usize) -> Result<SparseVector> {
        if doc_len == 0 {
            return Ok(Vec::new());
        }
        let n = self.num_docs as f64;
        let mut out = Vec::with_capacity(counts.len());
        for &(id, c) in counts {
            let df = self.features[id].1;
            if df == 0 {
                return Err(Error::Numerical(format!("feature {:?} has zero document frequency", self.features[id].0)));
            }
            let v = (c / doc_len as f64) * (n / df as f64).ln();
            if v != 0.0 {
                out.push((id, v));
            }
        }
        Ok(out)
    }

    /// Features for one document in the representation of `kind`.
    pub fn vectorize<S: AsRef<str>>(&self, tokens: &[S], tfidf: bool) -> Result<SparseVector> {
        let counts = self.counts(tokens);
        if tfidf {
            self.tfidf(&counts, tokens.len())
        } else {
            Ok(counts)
        }
    }

    pub fn vectorize_all<D: AsRef<[S]> + Sync, S: AsRef<str> + Sync>(&self, docs: &[D], tfidf: bool) -> Result<Vec<SparseVector>> {
        docs.par_iter().map(|d| self.vectorize(d.as_ref(), tfidf)).collect()
    }

    pub fn write_dump<W: Write>(&self, w: W) -> Result<()> {
        write_count_table(
            w,
            &format!("FEATS v1 {} {} {} {}", self.len(), self.num_docs, self.n_lo, self.n_hi),
            self.features.iter().map(|(f, c)| (f.as_str(), *c)),
        )
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let (header, features) = read_count_table(r, "FEATS v1")?;
        let [size, num_docs, n_lo, n_hi] = header[..] else {
            return Err(Error::format("FEATS header needs size, num_docs, n_lo and n_hi"));
        };
        if size as usize != features.len() {
            return Err(Error::format(format!("FEATS header declares {size} features, found {}", features.len())));
        }
        let ordered = features
            .windows(2)
            .all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        if !ordered {
            return Err(Error::format("FEATS entries are not in canonical order"));
        }
        Ok(Self::from_parts(features, num_docs, n_lo as usize, n_hi as usize))
    }
}

/// Builds per-document count vectors and the vocabulary in one pass.
pub fn count_features<D: AsRef<[S]> + Sync, S: AsRef<str> + Sync>(
    docs: &[D],
    n_lo: usize,
    n_hi: usize,
    max_features: usize,
) -> Result<(FeatureVocabulary, Vec<SparseVector>)> {
    let vocab = FeatureVocabulary::build(docs, n_lo, n_hi, max_features)?;
    let vectors = vocab.vectorize_all(docs, false)?;
    Ok((vocab, vectors))
}

/// TF-IDF for a batch of count vectors with their documents' token counts.
pub fn tfidf_transform(vocab: &FeatureVocabulary, counts: &[SparseVector], doc_lens: &[usize]) -> Result<Vec<SparseVector>> {
    if counts.len() != doc_lens.len() {
        return Err(Error::invalid("one document length per count vector is required"));
    }
    counts.iter().zip(doc_lens).map(|(c, &len)| vocab.tfidf(c, len)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegConfig {
    pub l2_lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Recorded for reports; full-batch descent draws no random numbers.
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2_lambda: 1.0,
            epochs: 100,
            lr: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
}

impl LogRegModel {
    pub fn zeros(dim: usize, l2_lambda: f64) -> Self {
        LogRegModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            l2_lambda,
        }
    }

    pub fn logit(&self, x: &SparseVector) -> f64 {
        self.bias + x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// `(label, p(Suspended))`; ties go to the negative class.
pub fn predict_logreg(model: &LogRegModel, x: &SparseVector) -> (Label, f64) {
    let p = sigmoid(model.logit(x));
    (Label::from(p > 0.5), p)
}

/// Log-loss of one example with logit `z`, stable for large `|z|`.
fn log_loss(z: f64, y: f64) -> f64 {
    // ln(1 + e^z) − y·z
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    softplus - y * z
}

#[derive(Debug, Clone)]
pub struct LogRegGradient {
    pub objective: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Mean log-loss plus `(λ/2)·‖w‖²` and its full-batch gradient.
pub fn objective_and_grad(model: &LogRegModel, xs: &[SparseVector], labels: &[Label]) -> LogRegGradient {
    let n = xs.len().max(1) as f64;
    let mut objective = 0.0;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = 0.0;
    for (x, label) in xs.iter().zip(labels) {
        let y = if label.is_positive() { 1.0 } else { 0.0 };
        let z = model.logit(x);
        objective += log_loss(z, y);
        let r = sigmoid(z) - y;
        gb += r;
        for &(i, v) in x {
            gw[i] += r * v;
        }
    }
    objective /= n;
    gb /= n;
    let reg: f64 = model.weights.iter().map(|w| w * w).sum();
    objective += 0.5 * model.l2_lambda * reg;
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        *g = *g / n + model.l2_lambda * w;
    }
    LogRegGradient {
        objective,
        weights: gw,
        bias: gb,
    }
}

/// Full-batch gradient descent from zero for `epochs` steps.
pub fn train_logreg(xs: &[SparseVector], labels: &[Label], dim: usize, config: &LogRegConfig) -> Result<LogRegModel> {
    if xs.len() != labels.len() {
        return Err(Error::invalid("one label per feature vector is required"));
    }
    if !(labels.iter().any(|l| l.is_positive()) && labels.iter().any(|l| !l.is_positive())) {
        return Err(Error::invalid("logistic regression needs both classes in the training data"));
    }
    if !(config.lr > 0.0) || !(config.l2_lambda >= 0.0) {
        return Err(Error::Config(vec![format!(
            "lr must be positive and l2_lambda non-negative (got {}, {})",
            config.lr, config.l2_lambda
        )]));
    }
    let mut model = LogRegModel::zeros(dim, config.l2_lambda);
    for step in 0..config.epochs {
        let g = objective_and_grad(&model, xs, labels);
        if !g.objective.is_finite() {
            return Err(Error::Diverged {
                step: step as u64,
                reason: "non-finite logistic objective".into(),
            });
        }
        for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
            *w -= config.lr * gw;
        }
        model.bias -= config.lr * g.bias;
        if !model.is_finite() {
            return Err(Error::Diverged {
                step: step as u64,
                reason: "non-finite logistic weights".into(),
            });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| t.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn ngram_examples() {
        assert_eq!(extract_ngrams(&["a", "b", "c"], 1, 2), vec!["a", "b", "c", "a b", "b c"]);
        assert_eq!(extract_ngrams(&["a"], 1, 5), vec!["a"]);
        let six: Vec<String> = (0..6).map(|i| i.to_string()).collect();
        assert_eq!(extract_ngrams(&six, 1, 5).len(), 20);
    }

    #[test]
    fn ngram_count_formula_exhaustive() {
        for t in 0..=20usize {
            let toks: Vec<String> = (0..t).map(|i| format!("w{i}")).collect();
            for lo in 1..=5 {
                for hi in lo..=5 {
                    let expected: usize = (lo..=hi).map(|n| (t + 1).saturating_sub(n)).sum();
                    assert_eq!(extract_ngrams(&toks, lo, hi).len(), expected);
                }
            }
        }
    }

    #[test]
    fn tfidf_fixture() {
        let corpus = docs(&["a b a", "b c"]);
        let (vocab, counts) = count_features(&corpus, 1, 1, DEFAULT_MAX_FEATURES).unwrap();
        let a = vocab.id("a").unwrap();
        let c = vocab.id("c").unwrap();
        assert_eq!(counts[0], {
            let mut v = vec![(a, 2.0), (vocab.id("b").unwrap(), 1.0)];
            v.sort_by_key(|p| p.0);
            v
        });
        let lens: Vec<usize> = corpus.iter().map(Vec::len).collect();
        let t = tfidf_transform(&vocab, &counts, &lens).unwrap();
        assert_eq!(t[0], vec![(a, (2.0 / 3.0) * 2f64.ln())]);
        assert_eq!(t[1], vec![(c, 0.5 * 2f64.ln())]);
        assert!((t[0][0].1 - 0.46210).abs() < 5e-6);
        assert!((t[1][0].1 - 0.34657).abs() < 5e-6);
    }

    #[test]
    fn feature_cap_uses_document_frequency() {
        let corpus = docs(&["b b b b a", "a c", "a d"]);
        let vocab = FeatureVocabulary::build(&corpus, 1, 1, 1).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.feature(0), "a");
        let full = FeatureVocabulary::build(&corpus, 1, 1, 100).unwrap();
        let order: Vec<&str> = (0..full.len()).map(|i| full.feature(i)).collect();
        assert_eq!(order, vec!["a", "b", "c", "d"]);
        assert!(full.counts(&["zzz"]).is_empty());
        assert!(FeatureVocabulary::build(&Vec::<Vec<String>>::new(), 1, 1, 5).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let corpus = docs(&["x y z x", "y z", "z q r"]);
        let vocab = FeatureVocabulary::build(&corpus, 1, 3, 100).unwrap();
        let mut buf = Vec::new();
        vocab.write_dump(&mut buf).unwrap();
        assert!(buf.starts_with(b"FEATS v1 "));
        assert_eq!(FeatureVocabulary::read_dump(buf.as_slice()).unwrap(), vocab);
    }

    #[test]
    fn sigmoid_prediction() {
        let zero = LogRegModel::zeros(2, 1.0);
        assert_eq!(predict_logreg(&zero, &vec![(0, 1.0)]), (Label::NotSuspended, 0.5));
        let m = LogRegModel {
            weights: vec![3f64.ln(), 0.0],
            bias: 0.0,
            l2_lambda: 0.0,
        };
        let (label, p) = predict_logreg(&m, &vec![(0, 1.0)]);
        assert_eq!(label, Label::Suspended);
        assert!((p - 0.75).abs() < 1e-15);
        for z in [-30.0f64, -2.5, 0.0, 1e-3, 7.0, 40.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() <= 1e-15);
        }
    }

    fn toy_data(n: usize, seed: u64) -> (Vec<SparseVector>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let pos = i % 3 == 0;
            let mut x = vec![(0, if pos { 1.0 } else { 0.0 } + 1e-3)];
            x.push((1, rng.random_range(0.1..1.0)));
            xs.push(x);
            ys.push(Label::from(pos));
        }
        (xs, ys)
    }

    #[test]
    fn perfectly_correlated_feature() {
        let (xs, ys) = toy_data(60, 1);
        let cfg = LogRegConfig { l2_lambda: 1e-6, epochs: 2000, lr: 1.0, seed: 0 };
        let m = train_logreg(&xs, &ys, 2, &cfg).unwrap();
        assert!(xs.iter().zip(&ys).all(|(x, y)| predict_logreg(&m, x).0 == *y));
    }

    #[test]
    fn huge_lambda_gives_prior() {
        let (xs, ys) = toy_data(60, 2);
        let cfg = LogRegConfig { l2_lambda: 1e6, epochs: 3000, lr: 1e-6, seed: 0 };
        let m = train_logreg(&xs, &ys, 2, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-5), "{:?}", m.weights);
        // a per-parameter step (1 for the bias, 1/λ scale for weights) reaches the optimum
        let mut trained = LogRegModel::zeros(2, 1e6);
        for _ in 0..3000 {
            let g = objective_and_grad(&trained, &xs, &ys);
            trained.bias -= g.bias;
            for (w, gw) in trained.weights.iter_mut().zip(&g.weights) {
                *w -= 1e-6 * gw;
            }
        }
        assert!(trained.weights.iter().all(|w| w.abs() < 1e-5));
        let p = predict_logreg(&trained, &xs[0]).1;
        assert!((p - 1.0 / 3.0).abs() < 1e-3, "{p}");
    }

    #[test]
    fn loss_is_monotone_at_small_lr() {
        let (xs, ys) = toy_data(40, 3);
        let mut m = LogRegModel::zeros(2, 1.0);
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let g = objective_and_grad(&m, &xs, &ys);
            assert!(g.objective <= last + 1e-15);
            last = g.objective;
            for (w, gw) in m.weights.iter_mut().zip(&g.weights) {
                *w -= 0.01 * gw;
            }
            m.bias -= 0.01 * g.bias;
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let xs = vec![vec![(0, 1.0)]; 3];
        assert!(train_logreg(&xs, &[Label::Suspended; 3], 1, &LogRegConfig::default()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (xs, ys) = toy_data(25, 4);
        let mut m = LogRegModel {
            weights: vec![0.7, -1.3],
            bias: 0.2,
            l2_lambda: 0.5,
        };
        let g = objective_and_grad(&m, &xs, &ys);
        let eps = 1e-6;
        for i in 0..2 {
            let orig = m.weights[i];
            m.weights[i] = orig + eps;
            let up = objective_and_grad(&m, &xs, &ys).objective;
            m.weights[i] = orig - eps;
            let down = objective_and_grad(&m, &xs, &ys).objective;
            m.weights[i] = orig;
            let num = (up - down) / (2.0 * eps);
            assert!((num - g.weights[i]).abs() <= 1e-6 * num.abs().max(1e-3));
        }
        m.bias += eps;
        let up = objective_and_grad(&m, &xs, &ys).objective;
        m.bias -= 2.0 * eps;
        let down = objective_and_grad(&m, &xs, &ys).objective;
        let num = (up - down) / (2.0 * eps);
        assert!((num - g.bias).abs() <= 1e-6 * num.abs().max(1e-3));
    }

    proptest! {
        #[test]
        fn tfidf_is_non_negative_and_zero_for_ubiquitous(
            raw in prop::collection::vec(prop::collection::vec(0u8..6, 1..12), 1..8)
        ) {
            let mut corpus: Vec<Vec<String>> = raw.iter().map(|d| d.iter().map(|t| format!("t{t}")).collect()).collect();
            for d in &mut corpus {
                d.push("everywhere".into());
            }
            let vocab = FeatureVocabulary::build(&corpus, 1, 2, 1000).unwrap();
            let every = vocab.id("everywhere").unwrap();
            for d in &corpus {
                let v = vocab.vectorize(d, true).unwrap();
                prop_assert!(v.iter().all(|&(i, x)| x > 0.0 && x.is_finite() && i != every));
                prop_assert!(v.windows(2).all(|w| w[0].0 < w[1].0));
            }
        }

        #[test]
        fn ngrams_match_brute_force(toks in prop::collection::vec("[a-c]{1,2}", 0..9)) {
            let mut expected = Vec::new();
            for n in 1..=5 {
                for start in 0..toks.len() {
                    if start + n <= toks.len() {
                        expected.push(toks[start..start + n].join(" "));
                    }
                }
            }
            prop_assert_eq!(extract_ngrams(&toks, 1, 5), expected);
        }
    }
}

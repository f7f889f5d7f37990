//! Skipgram with negative sampling over word + subword input rows.

use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sampler::NegativeSampler;
use super::{EmbeddingModel, SkipgramConfig};
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, LocalMatrix, Matrix, RowStore, SharedMatrix};
use crate::vocab::Vocabulary;

/// Parameters larger than this in magnitude abort training.
pub const DIVERGENCE_LIMIT: f32 = 1e8;

/// `ln σ(x)` without overflow.
#[inline]
pub fn log_sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// One term of the negative-sampling objective: `ln σ(u·h)` for the true
/// context, `ln σ(−u·h)` for a noise word. Adds `∂/∂h` into `grad_hidden` and
/// returns `(objective, g)` where `∂/∂u = g · h`.
#[inline]
pub fn accumulate_pair<T: Float>(hidden: &[T], row: &[T], positive: bool, grad_hidden: &mut [T]) -> (T, T) {
    let score = dot(row, hidden);
    let (objective, g) = if positive {
        (log_sigmoid(score), T::one() - sigmoid(score))
    } else {
        (log_sigmoid(-score), -sigmoid(score))
    };
    axpy(g, row, grad_hidden);
    (objective, g)
}

/// Objective value and gradients for one center/context pair.
#[derive(Debug, Clone)]
pub struct PairGradient<T> {
    pub objective: T,
    pub hidden: Vec<T>,
    pub positive: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

/// `ln σ(u_c·h) + Σ ln σ(−u_n·h)` and its gradient w.r.t. `h` and every `u`.
pub fn pair_objective_and_grad<T: Float>(hidden: &[T], positive: &[T], negatives: &[&[T]]) -> PairGradient<T> {
    let mut grad_hidden = vec![T::zero(); hidden.len()];
    let scale = |g: T| hidden.iter().map(|&h| g * h).collect::<Vec<T>>();
    let (mut objective, g) = accumulate_pair(hidden, positive, true, &mut grad_hidden);
    let grad_positive = scale(g);
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for row in negatives {
        let (o, g) = accumulate_pair(hidden, row, false, &mut grad_hidden);
        objective = objective + o;
        grad_negatives.push(scale(g));
    }
    PairGradient {
        objective,
        hidden: grad_hidden,
        positive: grad_positive,
        negatives: grad_negatives,
    }
}

/// `max(0, 1 − sqrt(t / f))` for a word with corpus frequency `f`.
pub fn discard_probability(frequency: f64, threshold: f64) -> f64 {
    if frequency <= 0.0 {
        return 0.0;
    }
    (1.0 - (threshold / frequency).sqrt()).max(0.0)
}

/// `lr0 · (1 − t/T)`, clamped at zero.
#[inline]
pub fn linear_lr(initial: f64, progress: u64, total: u64) -> f64 {
    if total == 0 {
        return initial;
    }
    (initial * (1.0 - progress as f64 / total as f64)).max(0.0)
}

pub(crate) fn initial_input(rows: usize, dim: usize, seed: u64) -> Matrix<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / dim as f32;
    let data = (0..rows * dim).map(|_| rng.random_range(-bound..=bound)).collect();
    Matrix::from_vec(rows, dim, data)
}

pub(crate) fn worker_seed(seed: u64, worker: usize) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(worker as u64 + 1)
}

/// Splits `items` into at most `parts` contiguous chunks of similar total
/// weight.
pub(crate) fn shard<T>(items: &[T], parts: usize, weight: impl Fn(&T) -> usize) -> Vec<&[T]> {
    let parts = parts.max(1).min(items.len().max(1));
    let total: usize = items.iter().map(&weight).sum();
    let target = total.div_ceil(parts).max(1);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    let mut acc = 0;
    for (i, it) in items.iter().enumerate() {
        acc += weight(it);
        if acc >= target && out.len() + 1 < parts {
            out.push(&items[start..=i]);
            start = i + 1;
            acc = 0;
        }
    }
    out.push(&items[start..]);
    out
}

struct Shared<'a, M> {
    config: &'a SkipgramConfig,
    word_rows: &'a [Vec<usize>],
    keep_prob: &'a [f64],
    sampler: &'a NegativeSampler,
    input: &'a M,
    context: &'a M,
    progress: AtomicU64,
    total: u64,
}

fn run_worker<M: RowStore>(shared: &Shared<'_, M>, sentences: &[Vec<u32>], seed: u64) -> Result<()> {
    let cfg = shared.config;
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden = vec![0f32; dim];
    let mut grad = vec![0f32; dim];
    let mut row = vec![0f32; dim];
    let mut kept: Vec<usize> = Vec::new();
    let mut step = 0u64;

    for _ in 0..cfg.epochs {
        for sentence in sentences {
            let progress = shared.progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
            let lr = linear_lr(cfg.initial_lr, progress, shared.total) as f32;
            kept.clear();
            for &w in sentence {
                let p = shared.keep_prob[w as usize];
                if p >= 1.0 || rng.random::<f64>() < p {
                    kept.push(w as usize);
                }
            }
            for (i, &center) in kept.iter().enumerate() {
                let rows = &shared.word_rows[center];
                let inv = 1.0 / rows.len() as f32;
                let radius = rng.random_range(1..=cfg.window);
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(kept.len() - 1);
                for (j, &target) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    step += 1;
                    hidden.fill(0.0);
                    shared.input.accumulate_rows(rows, &mut hidden);
                    hidden.iter_mut().for_each(|h| *h *= inv);
                    grad.fill(0.0);
                    let mut objective = 0f32;
                    let mut max_abs = 0f32;
                    for k in 0..=cfg.negatives {
                        let (word, positive) = if k == 0 {
                            (target, true)
                        } else {
                            (shared.sampler.sample_excluding(&mut rng, target), false)
                        };
                        shared.context.read_row(word, &mut row);
                        let (o, g) = accumulate_pair(&hidden, &row, positive, &mut grad);
                        objective += o;
                        max_abs = max_abs.max(shared.context.add_to_row(word, lr * g, &hidden));
                    }
                    for &r in rows {
                        max_abs = max_abs.max(shared.input.add_to_row(r, lr, &grad));
                    }
                    if !objective.is_finite() {
                        return Err(Error::Diverged {
                            step,
                            reason: "non-finite objective".into(),
                        });
                    }
                    if max_abs > DIVERGENCE_LIMIT {
                        return Err(Error::Diverged {
                            step,
                            reason: format!("parameter magnitude {max_abs:e}"),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn input_rows_per_word(model_vocab: &Vocabulary, subwords: &crate::vocab::SubwordIndex) -> Vec<Vec<usize>> {
    (0..model_vocab.len())
        .map(|id| subwords.input_ids(model_vocab.word(id), model_vocab))
        .collect()
}

/// Trains skipgram embeddings on a tokenized corpus (one token list per
/// sentence or document). With `workers == 1` the result is a deterministic
/// function of the corpus and config.
pub fn train_skipgram<D, S>(corpus: &[D], config: &SkipgramConfig) -> Result<EmbeddingModel>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    config.validate()?;
    let vocab = Vocabulary::build(corpus.iter().map(|d| d.as_ref().iter()), config.min_count)?;
    let sentences: Vec<Vec<u32>> = corpus
        .iter()
        .map(|d| {
            d.as_ref()
                .iter()
                .filter_map(|t| vocab.id(t.as_ref()).map(|i| i as u32))
                .collect::<Vec<u32>>()
        })
        .filter(|s| !s.is_empty())
        .collect();
    let total_tokens = vocab.total_tokens() as f64;
    let keep_prob: Vec<f64> = vocab
        .iter()
        .map(|(_, c)| 1.0 - discard_probability(c as f64 / total_tokens, config.subsample_t))
        .collect();
    let word_rows = input_rows_per_word(&vocab, &config.subwords);
    let n_rows = config.subwords.input_rows(&vocab);
    let input = initial_input(n_rows, config.dim, config.seed);
    let context = Matrix::<f32>::zeros(vocab.len(), config.dim);

    if config.epochs == 0 {
        return Ok(EmbeddingModel::new(vocab, config.subwords, input, context));
    }

    let sampler = NegativeSampler::new(&vocab)?;
    let in_vocab_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total = in_vocab_tokens * config.epochs as u64;
    let shards = shard(&sentences, config.workers, |s| s.len());
    let (input, context) = if shards.len() == 1 {
        let input = LocalMatrix::from_matrix(&input);
        let context = LocalMatrix::from_matrix(&context);
        let shared = Shared {
            config,
            word_rows: &word_rows,
            keep_prob: &keep_prob,
            sampler: &sampler,
            input: &input,
            context: &context,
            progress: AtomicU64::new(0),
            total,
        };
        run_worker(&shared, shards[0], worker_seed(config.seed, 0))?;
        (input.to_matrix(), context.to_matrix())
    } else {
        let input = SharedMatrix::from_matrix(&input);
        let context = SharedMatrix::from_matrix(&context);
        let shared = Shared {
            config,
            word_rows: &word_rows,
            keep_prob: &keep_prob,
            sampler: &sampler,
            input: &input,
            context: &context,
            progress: AtomicU64::new(0),
            total,
        };
        std::thread::scope(|scope| {
            let handles: Vec<_> = shards
                .iter()
                .enumerate()
                .map(|(w, part)| {
                    let shared = &shared;
                    scope.spawn(move || run_worker(shared, part, worker_seed(config.seed, w)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("skipgram worker panicked"))
                .collect::<Result<Vec<()>>>()
        })?;
        (input.to_matrix(), context.to_matrix())
    };

    Ok(EmbeddingModel::new(vocab, config.subwords, input, context))
}

/// A fixed set of (center, context, negatives) triples for tracking the
/// objective across training.
#[derive(Debug, Clone)]
pub struct EvaluationSample {
    pub pairs: Vec<(usize, usize, Vec<usize>)>,
}

impl EvaluationSample {
    pub fn draw<D, S>(model: &EmbeddingModel, corpus: &[D], window: usize, negatives: usize, count: usize, seed: u64) -> Result<Self>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        let vocab = model.vocab();
        let sentences: Vec<Vec<usize>> = corpus
            .iter()
            .map(|d| d.as_ref().iter().filter_map(|t| vocab.id(t.as_ref())).collect::<Vec<_>>())
            .filter(|s: &Vec<usize>| s.len() >= 2)
            .collect();
        if sentences.is_empty() {
            return Err(Error::invalid("no sentence has two in-vocabulary tokens"));
        }
        let sampler = NegativeSampler::new(vocab)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(count);
        while pairs.len() < count {
            let s = &sentences[rng.random_range(0..sentences.len())];
            let i = rng.random_range(0..s.len());
            let radius = rng.random_range(1..=window.max(1));
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(s.len() - 1);
            let j = rng.random_range(lo..=hi);
            if j == i {
                continue;
            }
            let negs = (0..negatives).map(|_| sampler.sample_excluding(&mut rng, s[j])).collect();
            pairs.push((s[i], s[j], negs));
        }
        Ok(EvaluationSample { pairs })
    }

    /// Mean objective over the sample at 64-bit precision.
    pub fn mean_objective(&self, model: &EmbeddingModel) -> f64 {
        let input = model.input().map(f64::from);
        let context = model.context().map(f64::from);
        let word_rows = input_rows_per_word(model.vocab(), model.subwords());
        let total: f64 = self
            .pairs
            .iter()
            .map(|(c, t, negs)| {
                let hidden = crate::matrix::mean_rows(&input, &word_rows[*c]);
                let neg_rows: Vec<&[f64]> = negs.iter().map(|&n| context.row(n)).collect();
                pair_objective_and_grad(&hidden, context.row(*t), &neg_rows).objective
            })
            .sum();
        total / self.pairs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0f64) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0f64).is_finite());
        assert_eq!(log_sigmoid(800.0f64), 0.0);
        assert!((sigmoid(3.0f64) + sigmoid(-3.0f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pair_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 6;
        let mut vecs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let objective = |v: &[Vec<f64>]| {
            let negs: Vec<&[f64]> = v[2..].iter().map(|r| r.as_slice()).collect();
            pair_objective_and_grad(&v[0], &v[1], &negs).objective
        };
        let negs: Vec<&[f64]> = vecs[2..].iter().map(|r| r.as_slice()).collect();
        let g = pair_objective_and_grad(&vecs[0], &vecs[1], &negs);
        let analytic = [g.hidden.clone(), g.positive.clone(), g.negatives[0].clone(), g.negatives[1].clone()];
        let eps = 1e-5;
        for (which, grad) in analytic.iter().enumerate() {
            for k in 0..d {
                let orig = vecs[which][k];
                vecs[which][k] = orig + eps;
                let up = objective(&vecs);
                vecs[which][k] = orig - eps;
                let down = objective(&vecs);
                vecs[which][k] = orig;
                let numeric = (up - down) / (2.0 * eps);
                assert!(rel_err(numeric, grad[k]) < 1e-4, "vec {which} coord {k}: {numeric} vs {}", grad[k]);
            }
        }
    }

    #[test]
    fn discard_rule() {
        assert_eq!(discard_probability(1e-5, 1e-4), 0.0);
        assert_eq!(discard_probability(1e-4, 1e-4), 0.0);
        assert!((discard_probability(4e-4, 1e-4) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lr_schedule_is_linear_and_non_negative() {
        let total = 1000;
        for t in 0..=total {
            let lr = linear_lr(0.05, t, total);
            assert!(lr >= 0.0);
            assert!((lr - 0.05 * (1.0 - t as f64 / total as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn shards_cover_everything() {
        let items: Vec<usize> = (1..=10).collect();
        let parts = shard(&items, 3, |&x| x);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts.concat(), items);
        assert_eq!(shard(&items, 1, |&x| x).len(), 1);
    }
}

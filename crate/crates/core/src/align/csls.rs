//! Cross-domain similarity local scaling (CSLS) retrieval.
//!
//! `csls(x, y) = 2·cos(x, y) − r_t(x) − r_s(y)` where `r_t(x)` is the mean
//! cosine of `x` to its `k` nearest target vectors and `r_s(y)` the mean
//! cosine of `y` to its `k` nearest mapped-source vectors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};

pub const DEFAULT_CSLS_K: usize = 10;

pub fn csls_score(x_mapped: &[f64], y: &[f64], r_t: f64, r_s: f64) -> Result<f64> {
    let (nx, ny) = (norm(x_mapped), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Numerical("cannot normalize a zero-norm vector".into()));
    }
    Ok(2.0 * dot(x_mapped, y) / (nx * ny) - r_t - r_s)
}

/// Rows scaled to unit L2 norm.
pub fn normalize_rows(m: &Matrix<f64>) -> Result<Matrix<f64>> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let n = norm(row);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Numerical(format!("row {i} has norm {n}; cannot normalize")));
        }
        row.iter_mut().for_each(|x| *x /= n);
    }
    Ok(out)
}

/// For each query row, the mean of its `k` largest cosines against `base`
/// (both already unit-normalized).
pub fn mean_topk_similarity(queries: &Matrix<f64>, base: &Matrix<f64>, k: usize) -> Vec<f64> {
    let k = k.min(base.rows()).max(1);
    (0..queries.rows())
        .into_par_iter()
        .map(|i| {
            let q = queries.row(i);
            let mut sims: Vec<f64> = (0..base.rows()).map(|j| dot(q, base.row(j))).collect();
            if sims.is_empty() {
                return 0.0;
            }
            let pivot = sims.len() - k;
            sims.select_nth_unstable_by(pivot, f64::total_cmp);
            let top = &mut sims[pivot..];
            top.sort_unstable_by(f64::total_cmp);
            top.iter().sum::<f64>() / top.len() as f64
        })
        .collect()
}

/// Unit-normalized source (already mapped) and target spaces with their
/// CSLS penalty terms.
pub struct CslsSpace {
    pub source: Matrix<f64>,
    pub target: Matrix<f64>,
    /// `r_t` per source row.
    pub source_penalty: Vec<f64>,
    /// `r_s` per target row.
    pub target_penalty: Vec<f64>,
}

impl CslsSpace {
    pub fn new(mapped_source: &Matrix<f64>, target: &Matrix<f64>, k: usize) -> Result<Self> {
        if mapped_source.cols() != target.cols() {
            return Err(Error::DimensionMismatch {
                expected: target.cols(),
                found: mapped_source.cols(),
            });
        }
        let source = normalize_rows(mapped_source)?;
        let target = normalize_rows(target)?;
        let source_penalty = mean_topk_similarity(&source, &target, k);
        let target_penalty = mean_topk_similarity(&target, &source, k);
        Ok(CslsSpace {
            source,
            target,
            source_penalty,
            target_penalty,
        })
    }

    #[inline]
    pub fn score(&self, s: usize, t: usize) -> f64 {
        2.0 * dot(self.source.row(s), self.target.row(t)) - self.source_penalty[s] - self.target_penalty[t]
    }

    /// Best target for every source row (ties → lower index).
    pub fn best_targets(&self) -> Vec<(usize, f64)> {
        (0..self.source.rows())
            .into_par_iter()
            .map(|s| argmax((0..self.target.rows()).map(|t| self.score(s, t))))
            .collect()
    }

    /// Best source for every target row (ties → lower index).
    pub fn best_sources(&self) -> Vec<(usize, f64)> {
        (0..self.target.rows())
            .into_par_iter()
            .map(|t| argmax((0..self.source.rows()).map(|s| self.score(s, t))))
            .collect()
    }

    /// Target indices ranked by descending CSLS for source row `s`, first `k`.
    pub fn top_targets(&self, s: usize, k: usize) -> Vec<usize> {
        let mut scored: Vec<(usize, f64)> = (0..self.target.rows()).map(|t| (t, self.score(s, t))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored.into_iter().map(|(t, _)| t).collect()
    }
}

fn argmax(scores: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (i, s) in scores.enumerate() {
        if s > best.1 || best.0 == usize::MAX {
            best = (i, s);
        }
    }
    best
}

//! Precomputed per-account feature vectors and a softmax head trained on
//! them with Adam.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{softmax, softmax_head, Prediction, NUM_CLASSES};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Text table: header `count dim`, then `account_id v1 … v_dim` per line.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        FeatureTable {
            ids: Vec::new(),
            index: HashMap::new(),
            dim,
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, features: &[f64]) -> Result<()> {
        let id = id.into();
        if features.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: features.len(),
            });
        }
        if self.index.contains_key(&id) {
            return Err(Error::format(format!("duplicate account id {id:?} in feature table")));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(features);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{id}")?;
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::format("feature table is empty"))??;
        let mut parts = header.split_whitespace();
        let parse = |s: Option<&str>, what: &str| -> Result<usize> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format(format!("bad feature table header {header:?}: missing {what}")))
        };
        let count = parse(parts.next(), "count")?;
        let dim = parse(parts.next(), "dim")?;
        let mut table = FeatureTable::new(dim);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let id = fields.next().unwrap_or_default();
            let values = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(format!("feature line {}: {e}", n + 2)))?;
            if values.len() != dim {
                return Err(Error::format(format!(
                    "feature line {}: expected {dim} values, found {}",
                    n + 2,
                    values.len()
                )));
            }
            table.push(id, &values)?;
        }
        if table.len() != count {
            return Err(Error::format(format!("feature table header says {count} rows, found {}", table.len())));
        }
        Ok(table)
    }
}

/// Pairs each labeled account with its feature row; every account must be
/// present in the table.
pub fn import_external_features(table: &FeatureTable, accounts: &[(String, Label)]) -> Result<Vec<(Vec<f64>, Label)>> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(accounts.len());
    for (id, label) in accounts {
        match table.get(id) {
            Some(f) => out.push((f.to_vec(), *label)),
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "{} accounts have no external features (first: {})",
            missing.len(),
            missing[0]
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.lr > 0.0) {
            errs.push(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            errs.push("betas must lie in [0, 1)".into());
        }
        if !(self.eps > 0.0) {
            errs.push("eps must be positive".into());
        }
        if self.batch_size == 0 {
            errs.push("batch_size must be >= 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// `p = softmax(W·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxHead {
    pub weights: Matrix<f64>,
    pub bias: [f64; NUM_CLASSES],
}

impl SoftmaxHead {
    pub fn zeros(dim: usize) -> Self {
        SoftmaxHead {
            weights: Matrix::zeros(NUM_CLASSES, dim),
            bias: [0.0; NUM_CLASSES],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let mut logits = self.weights.mul_vec(x);
        logits.iter_mut().zip(self.bias).for_each(|(z, b)| *z += b);
        let p = softmax(&logits);
        Prediction::from_probabilities([p[0], p[1]])
    }

    /// Mean cross-entropy and its gradient over a batch.
    fn batch_grad(&self, data: &[(Vec<f64>, Label)], batch: &[usize]) -> (f64, Matrix<f64>, [f64; NUM_CLASSES]) {
        // bias enters as a weight on a constant-one feature
        let dim = self.dim();
        let ext = Matrix::from_fn(NUM_CLASSES, dim + 1, |c, j| if j < dim { self.weights.get(c, j) } else { self.bias[c] });
        let mut loss = 0.0;
        let mut gw = Matrix::<f64>::zeros(NUM_CLASSES, dim);
        let mut gb = [0.0; NUM_CLASSES];
        let mut x = vec![1.0; dim + 1];
        for &i in batch {
            let (features, label) = &data[i];
            x[..dim].copy_from_slice(features);
            let g = softmax_head(&ext, &x, label.index());
            loss += g.loss;
            for c in 0..NUM_CLASSES {
                for j in 0..dim {
                    gw.set(c, j, gw.get(c, j) + g.output.get(c, j));
                }
                gb[c] += g.output.get(c, dim);
            }
        }
        let n = batch.len().max(1) as f64;
        (loss / n, gw.map(|v: f64| v / n), gb.map(|v: f64| v / n))
    }

    pub fn mean_loss(&self, data: &[(Vec<f64>, Label)]) -> f64 {
        let all: Vec<usize> = (0..data.len()).collect();
        self.batch_grad(data, &all).0
    }
}

/// Mini-batch Adam from a zero initialization, reshuffling every epoch.
pub fn train_softmax_head(data: &[(Vec<f64>, Label)], config: &AdamConfig) -> Result<SoftmaxHead> {
    config.validate()?;
    let dim = match data.first() {
        Some((f, _)) => f.len(),
        None => return Err(Error::invalid("empty training set")),
    };
    if let Some((f, _)) = data.iter().find(|(f, _)| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: f.len(),
        });
    }
    let mut head = SoftmaxHead::zeros(dim);
    let n_params = NUM_CLASSES * (dim + 1);
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let (loss, gw, gb) = head.batch_grad(data, batch);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    step: step as u64,
                    reason: "non-finite loss in feature head".into(),
                });
            }
            step += 1;
            let c1 = 1.0 - config.beta1.powi(step);
            let c2 = 1.0 - config.beta2.powi(step);
            let grads = gw.as_slice().iter().chain(gb.iter());
            let params = head.weights.as_mut_slice().iter_mut().chain(head.bias.iter_mut());
            for (k, (p, &g)) in params.zip(grads).enumerate() {
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
                v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                *p -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
            }
        }
    }
    Ok(head)
}

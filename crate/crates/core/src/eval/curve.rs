use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::metrics::{binary_metrics, confusion, MetricsReport};
use super::report::CsvBlock;
use crate::classifier::{train_supervised, SupervisedConfig, TextClassifier};
use crate::corpus::{subsample_train, AccountDocument, Label};
use crate::embedding::WordVectors;
use crate::error::{Error, Result};

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
pub const CURVE_COLUMNS: [&str; 6] = ["fraction", "kind", "seed", "precision", "recall", "f1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Monolingual,
    Transfer,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Monolingual => "monolingual",
            ModelKind::Transfer => "transfer",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monolingual" => Ok(ModelKind::Monolingual),
            "transfer" => Ok(ModelKind::Transfer),
            _ => Err(Error::invalid(format!("unknown model kind {s:?} (expected monolingual or transfer)"))),
        }
    }
}

pub fn evaluate_classifier(model: &TextClassifier, docs: &[AccountDocument]) -> Result<MetricsReport> {
    let predictions: Vec<Label> = docs.par_iter().map(|d| model.predict(&d.tokens()).label).collect();
    let labels: Vec<Label> = docs.iter().map(|d| d.label).collect();
    Ok(binary_metrics(&confusion(&predictions, &labels)?))
}

pub fn labeled_tokens(docs: &[AccountDocument]) -> Vec<(Vec<&str>, Label)> {
    docs.iter().map(|d| (d.tokens(), d.label)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurvePoint {
    pub train_fraction: f64,
    pub kind: ModelKind,
    pub seed: u64,
    pub train_size: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMean {
    pub train_fraction: f64,
    pub kind: ModelKind,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_min: f64,
    pub f1_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<LearningCurvePoint>,
    pub means: Vec<CurveMean>,
}

impl LearningCurve {
    pub fn mean(&self, fraction: f64, kind: ModelKind) -> Option<&CurveMean> {
        self.means.iter().find(|m| m.train_fraction == fraction && m.kind == kind)
    }

    pub fn to_csv(&self) -> CsvBlock {
        let mut csv = CsvBlock::new(&CURVE_COLUMNS);
        for p in &self.points {
            csv.push(vec![
                p.train_fraction.to_string(),
                p.kind.to_string(),
                p.seed.to_string(),
                p.metrics.precision.to_string(),
                p.metrics.recall.to_string(),
                p.metrics.f1.to_string(),
            ])
            .expect("curve rows match the header");
        }
        csv
    }

    pub fn means_csv(&self) -> CsvBlock {
        let mut csv = CsvBlock::new(&["fraction", "kind", "precision", "recall", "f1", "f1_min", "f1_max"]);
        for m in &self.means {
            csv.push(vec![
                m.train_fraction.to_string(),
                m.kind.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.f1_min.to_string(),
                m.f1_max.to_string(),
            ])
            .expect("mean rows match the header");
        }
        csv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub kinds: Vec<ModelKind>,
    /// Its `seed` is replaced by each sweep seed.
    pub classifier: SupervisedConfig,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            fractions: DEFAULT_FRACTIONS.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            kinds: vec![ModelKind::Monolingual, ModelKind::Transfer],
            classifier: SupervisedConfig::default(),
        }
    }
}

/// One model per (fraction, seed, kind): the training set is
/// `subsample_train(train, fraction, seed)` and every model is scored on the
/// same `test` set. Transfer models start from `pretrained`.
pub fn learning_curve(
    train: &[AccountDocument],
    test: &[AccountDocument],
    pretrained: Option<&WordVectors>,
    config: &CurveConfig,
) -> Result<LearningCurve> {
    if let Some(f) = config.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::invalid(format!("training fraction {f} is outside (0, 1]")));
    }
    if config.kinds.contains(&ModelKind::Transfer) && pretrained.is_none() {
        return Err(Error::invalid("the transfer curve needs pretrained target vectors"));
    }
    let mut jobs = Vec::new();
    for &fraction in &config.fractions {
        for &seed in &config.seeds {
            for &kind in &config.kinds {
                jobs.push((fraction, seed, kind));
            }
        }
    }
    let points = jobs
        .par_iter()
        .map(|&(fraction, seed, kind)| {
            run_point(train, test, pretrained, &config.classifier, fraction, seed, kind)
                .map_err(|e| e.context(format!("curve point fraction={fraction} seed={seed} kind={kind}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut means = Vec::new();
    for &fraction in &config.fractions {
        for &kind in &config.kinds {
            let group: Vec<&LearningCurvePoint> = points
                .iter()
                .filter(|p| p.train_fraction == fraction && p.kind == kind)
                .collect();
            let n = group.len() as f64;
            let avg = |f: fn(&MetricsReport) -> f64| group.iter().map(|p| f(&p.metrics)).sum::<f64>() / n;
            means.push(CurveMean {
                train_fraction: fraction,
                kind,
                precision: avg(|m| m.precision),
                recall: avg(|m| m.recall),
                f1: avg(|m| m.f1),
                f1_min: group.iter().map(|p| p.metrics.f1).fold(f64::INFINITY, f64::min),
                f1_max: group.iter().map(|p| p.metrics.f1).fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Ok(LearningCurve { points, means })
}

fn run_point(
    train: &[AccountDocument],
    test: &[AccountDocument],
    pretrained: Option<&WordVectors>,
    base: &SupervisedConfig,
    fraction: f64,
    seed: u64,
    kind: ModelKind,
) -> Result<LearningCurvePoint> {
    let subset = subsample_train(train, fraction, seed)?;
    let config = SupervisedConfig { seed, ..base.clone() };
    let vectors = match kind {
        ModelKind::Monolingual => None,
        ModelKind::Transfer => pretrained,
    };
    let model = train_supervised(&labeled_tokens(&subset), &config, vectors)?;
    Ok(LearningCurvePoint {
        train_fraction: fraction,
        kind,
        seed,
        train_size: subset.len(),
        metrics: evaluate_classifier(&model, test)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::SubwordIndex;

    fn docs(n: usize, offset: usize) -> Vec<AccountDocument> {
        (0..n)
            .map(|i| {
                let pos = i % 3 == 0;
                AccountDocument {
                    account_id: format!("a{}", i + offset),
                    text: format!("{} w{} common", if pos { "bad" } else { "good" }, i % 7),
                    label: Label::from(pos),
                }
            })
            .collect()
    }

    fn quick() -> SupervisedConfig {
        SupervisedConfig {
            dim: 8,
            epochs: 20,
            subwords: SubwordIndex::new(3, 6, 1000).unwrap(),
            ..SupervisedConfig::default()
        }
    }

    #[test]
    fn degenerate_sweep_gives_two_points() {
        let (train, test) = (docs(30, 0), docs(12, 100));
        let mut pre = WordVectors::new(8);
        pre.push("bad", &[0.1; 8]).unwrap();
        let cfg = CurveConfig {
            fractions: vec![1.0],
            seeds: vec![7],
            classifier: quick(),
            ..CurveConfig::default()
        };
        let curve = learning_curve(&train, &test, Some(&pre), &cfg).unwrap();
        assert_eq!(curve.points.len(), 2);
        assert!(curve.points.iter().all(|p| p.train_size == 30 && p.metrics.f1 == 1.0));
        assert_eq!(curve.means.len(), 2);
        assert_eq!(curve.to_csv().columns, CURVE_COLUMNS);
        assert_eq!(curve, learning_curve(&train, &test, Some(&pre), &cfg).unwrap());
    }

    #[test]
    fn bad_sweeps() {
        let (train, test) = (docs(30, 0), docs(12, 100));
        let cfg = CurveConfig { fractions: vec![0.0], classifier: quick(), ..CurveConfig::default() };
        assert!(learning_curve(&train, &test, None, &cfg).is_err());
        let cfg = CurveConfig { fractions: vec![0.5], classifier: quick(), ..CurveConfig::default() };
        assert!(learning_curve(&train, &test, None, &cfg).is_err());
    }

    #[test]
    fn kind_names() {
        for k in [ModelKind::Monolingual, ModelKind::Transfer] {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("both".parse::<ModelKind>().is_err());
    }
}

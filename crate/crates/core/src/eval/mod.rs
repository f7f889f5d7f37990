//! Binary metrics for the positive class, learning-curve sweeps, synthetic
//! twin-language corpora and the text report format.

mod curve;
mod metrics;
mod report;
mod synth;

pub use curve::{
    evaluate_classifier, labeled_tokens, learning_curve, CurveConfig, CurveMean, LearningCurve, LearningCurvePoint,
    ModelKind, CURVE_COLUMNS, DEFAULT_FRACTIONS, DEFAULT_SEEDS,
};
pub use metrics::{binary_metrics, chance_f1, confusion, f1_score, ConfusionMatrix, MetricsReport, POSITIVE_CLASS};
pub use report::{CsvBlock, Report, Section, REPORT_HEADER};
pub use synth::{generate_synthetic_bilingual, rename, to_posts, SynthConfig, SyntheticBilingual};

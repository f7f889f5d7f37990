//! Pipeline configuration: a flat text file of `dotted.key = value` lines.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment            (a `#` starts a comment anywhere outside a value)
//! key = value          (whitespace around `=` and at both ends is ignored)
//! ```
//!
//! Keys are unique, unknown keys are errors, and every key not present keeps
//! its default. Lists are comma separated. Paths left empty resolve to the
//! artifact locations inside `paths.out_dir` (see [`ArtifactLayout`]).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::align::RefineConfig;
use crate::baselines::{LogRegConfig, DEFAULT_MAX_FEATURES};
use crate::classifier::{AdamConfig, SupervisedConfig};
use crate::embedding::SkipgramConfig;
use crate::error::{Error, Result};
use crate::eval::{SynthConfig, DEFAULT_FRACTIONS, DEFAULT_SEEDS};
use crate::transfer::TransferVectors;
use crate::vocab::SubwordIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub source_posts: PathBuf,
    pub source_statuses: PathBuf,
    pub target_posts: PathBuf,
    pub target_statuses: PathBuf,
    pub dictionary: PathBuf,
    pub eval_dictionary: PathBuf,
    pub external_features: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSettings {
    pub source_language: String,
    pub target_language: String,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSettings {
    pub dim: usize,
    pub epochs: usize,
    /// `None` until resolved, then defaults to `epochs`.
    pub target_epochs: Option<usize>,
    pub initial_lr: f64,
    pub window: usize,
    pub negatives: usize,
    pub subsample_t: f64,
    pub min_count: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub buckets: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignSettings {
    pub iterations: usize,
    pub csls_k: usize,
    pub top_k_vocab: usize,
    pub transfer_vectors: TransferVectors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSettings {
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub word_ngrams: usize,
    pub freeze_pretrained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSettings {
    pub max_features: usize,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSettings {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub generator: SynthConfig,
    pub dictionary_train: usize,
    pub dictionary_eval: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    pub paths: Paths,
    pub corpus: CorpusSettings,
    pub embedding: EmbeddingSettings,
    pub align: AlignSettings,
    pub classifier: ClassifierSettings,
    pub baseline: BaselineSettings,
    pub external: ExternalSettings,
    pub sweep: SweepSettings,
    pub synth: SynthSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let skipgram = SkipgramConfig::default();
        let supervised = SupervisedConfig::default();
        let refine = RefineConfig::default();
        let logreg = LogRegConfig::default();
        let adam = AdamConfig::default();
        let subwords = SubwordIndex::default();
        PipelineConfig {
            seed: 0,
            workers: 1,
            paths: Paths {
                out_dir: PathBuf::from("out"),
                source_posts: PathBuf::new(),
                source_statuses: PathBuf::new(),
                target_posts: PathBuf::new(),
                target_statuses: PathBuf::new(),
                dictionary: PathBuf::new(),
                eval_dictionary: PathBuf::new(),
                external_features: PathBuf::new(),
            },
            corpus: CorpusSettings {
                source_language: "en".into(),
                target_language: "tl".into(),
                train_fraction: 0.8,
            },
            embedding: EmbeddingSettings {
                dim: skipgram.dim,
                epochs: skipgram.epochs,
                target_epochs: None,
                initial_lr: skipgram.initial_lr,
                window: skipgram.window,
                negatives: skipgram.negatives,
                subsample_t: skipgram.subsample_t,
                min_count: skipgram.min_count,
                ngram_min: subwords.n_min(),
                ngram_max: subwords.n_max(),
                buckets: subwords.buckets(),
            },
            align: AlignSettings {
                iterations: refine.iterations,
                csls_k: refine.csls_k,
                top_k_vocab: refine.top_k_vocab,
                transfer_vectors: TransferVectors::Translated,
            },
            classifier: ClassifierSettings {
                epochs: supervised.epochs,
                initial_lr: supervised.initial_lr,
                min_count: supervised.min_count,
                word_ngrams: supervised.word_ngrams,
                freeze_pretrained: supervised.freeze_pretrained,
            },
            baseline: BaselineSettings {
                max_features: DEFAULT_MAX_FEATURES,
                l2_lambda: logreg.l2_lambda,
                epochs: logreg.epochs,
                lr: logreg.lr,
            },
            external: ExternalSettings {
                lr: adam.lr,
                epochs: adam.epochs,
                batch_size: adam.batch_size,
            },
            sweep: SweepSettings {
                fractions: DEFAULT_FRACTIONS.to_vec(),
                seeds: DEFAULT_SEEDS.to_vec(),
            },
            synth: SynthSettings {
                generator: SynthConfig::default(),
                dictionary_train: 500,
                dictionary_eval: 200,
            },
        }
    }
}

trait ConfigValue: Sized {
    fn parse_value(raw: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! plain_value {
    ($($t:ty => $what:literal),* $(,)?) => {$(
        impl ConfigValue for $t {
            fn parse_value(raw: &str) -> std::result::Result<Self, String> {
                raw.parse().map_err(|_| format!(concat!("expected ", $what, ", got {:?}"), raw))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

plain_value!(u32 => "a non-negative integer", u64 => "a non-negative integer", usize => "a non-negative integer", bool => "true or false", String => "text");

impl ConfigValue for f64 {
    fn parse_value(raw: &str) -> std::result::Result<Self, String> {
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("expected a finite number, got {raw:?}")),
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for PathBuf {
    fn parse_value(raw: &str) -> std::result::Result<Self, String> {
        Ok(PathBuf::from(raw))
    }
    fn render(&self) -> String {
        self.display().to_string()
    }
}

impl ConfigValue for TransferVectors {
    fn parse_value(raw: &str) -> std::result::Result<Self, String> {
        raw.parse().map_err(|e: Error| e.to_string())
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for Option<usize> {
    fn parse_value(raw: &str) -> std::result::Result<Self, String> {
        usize::parse_value(raw).map(Some)
    }
    fn render(&self) -> String {
        self.map(|v| v.to_string()).unwrap_or_default()
    }
}

impl<T: ConfigValue> ConfigValue for Vec<T> {
    fn parse_value(raw: &str) -> std::result::Result<Self, String> {
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',').map(|item| T::parse_value(item.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(T::render).collect::<Vec<_>>().join(",")
    }
}

macro_rules! config_keys {
    ($($key:literal => $($field:ident).+),* $(,)?) => {
        /// Every accepted key, in echo order.
        pub const CONFIG_KEYS: &[&str] = &[$($key),*];

        fn set_key(cfg: &mut PipelineConfig, key: &str, raw: &str) -> std::result::Result<(), String> {
            match key {
                $($key => cfg.$($field).+ = ConfigValue::parse_value(raw)?,)*
                _ => return Err("unknown key".into()),
            }
            Ok(())
        }

        fn echo_entries(cfg: &PipelineConfig) -> Vec<(&'static str, String)> {
            vec![$(($key, cfg.$($field).+.render())),*]
        }
    };
}

config_keys! {
    "seed" => seed,
    "workers" => workers,
    "paths.out_dir" => paths.out_dir,
    "paths.source_posts" => paths.source_posts,
    "paths.source_statuses" => paths.source_statuses,
    "paths.target_posts" => paths.target_posts,
    "paths.target_statuses" => paths.target_statuses,
    "paths.dictionary" => paths.dictionary,
    "paths.eval_dictionary" => paths.eval_dictionary,
    "paths.external_features" => paths.external_features,
    "corpus.source_language" => corpus.source_language,
    "corpus.target_language" => corpus.target_language,
    "corpus.train_fraction" => corpus.train_fraction,
    "embedding.dim" => embedding.dim,
    "embedding.epochs" => embedding.epochs,
    "embedding.target_epochs" => embedding.target_epochs,
    "embedding.lr" => embedding.initial_lr,
    "embedding.window" => embedding.window,
    "embedding.negatives" => embedding.negatives,
    "embedding.subsample_t" => embedding.subsample_t,
    "embedding.min_count" => embedding.min_count,
    "embedding.ngram_min" => embedding.ngram_min,
    "embedding.ngram_max" => embedding.ngram_max,
    "embedding.buckets" => embedding.buckets,
    "align.iterations" => align.iterations,
    "align.csls_k" => align.csls_k,
    "align.top_k_vocab" => align.top_k_vocab,
    "align.transfer_vectors" => align.transfer_vectors,
    "classifier.epochs" => classifier.epochs,
    "classifier.lr" => classifier.initial_lr,
    "classifier.min_count" => classifier.min_count,
    "classifier.word_ngrams" => classifier.word_ngrams,
    "classifier.freeze_pretrained" => classifier.freeze_pretrained,
    "baseline.max_features" => baseline.max_features,
    "baseline.l2_lambda" => baseline.l2_lambda,
    "baseline.epochs" => baseline.epochs,
    "baseline.lr" => baseline.lr,
    "external.lr" => external.lr,
    "external.epochs" => external.epochs,
    "external.batch_size" => external.batch_size,
    "sweep.fractions" => sweep.fractions,
    "sweep.seeds" => sweep.seeds,
    "synth.vocab_size" => synth.generator.vocab_size,
    "synth.zipf_exponent" => synth.generator.zipf_exponent,
    "synth.successors" => synth.generator.successors,
    "synth.coupling" => synth.generator.coupling,
    "synth.signal_words" => synth.generator.signal_words,
    "synth.signal_min_rank" => synth.generator.signal_min_rank,
    "synth.signal_rate" => synth.generator.signal_rate,
    "synth.signal_lift" => synth.generator.signal_lift,
    "synth.phrase_len" => synth.generator.phrase_len,
    "synth.positive_rate" => synth.generator.positive_rate,
    "synth.label_noise" => synth.generator.label_noise,
    "synth.doc_len_min" => synth.generator.doc_len_min,
    "synth.doc_len_max" => synth.generator.doc_len_max,
    "synth.source_docs" => synth.generator.source_docs,
    "synth.target_docs" => synth.generator.target_docs,
    "synth.posts_per_account" => synth.generator.posts_per_account,
    "synth.dictionary_train" => synth.dictionary_train,
    "synth.dictionary_eval" => synth.dictionary_eval,
}

/// Fixed artifact locations under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactLayout {
    pub root: PathBuf,
}

impl ArtifactLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ArtifactLayout { root: root.into() }
    }

    fn at(&self, parts: &[&str]) -> PathBuf {
        let mut p = self.root.clone();
        p.extend(parts);
        p
    }

    pub fn manifest(&self) -> PathBuf {
        self.at(&["manifest.log"])
    }

    pub fn synth_posts(&self, lang: Side) -> PathBuf {
        self.at(&["synth", &format!("{lang}.posts.tsv")])
    }

    pub fn synth_statuses(&self, lang: Side) -> PathBuf {
        self.at(&["synth", &format!("{lang}.statuses.tsv")])
    }

    pub fn synth_dictionary(&self, role: &str) -> PathBuf {
        self.at(&["synth", &format!("dictionary.{role}.txt")])
    }

    pub fn documents(&self, lang: Side, part: &str) -> PathBuf {
        self.at(&["corpus", &format!("{lang}.{part}.tsv")])
    }

    pub fn vectors(&self, lang: Side) -> PathBuf {
        self.at(&["embeddings", &format!("{lang}.vec")])
    }

    pub fn checkpoint(&self, lang: Side) -> PathBuf {
        self.at(&["embeddings", &format!("{lang}.xlemb")])
    }

    pub fn map(&self) -> PathBuf {
        self.at(&["align", "map.xlmap"])
    }

    pub fn transfer_vectors(&self) -> PathBuf {
        self.at(&["align", "transfer.vec"])
    }

    pub fn classifier(&self, kind: &str) -> PathBuf {
        self.at(&["classifier", &format!("{kind}.xlclf")])
    }

    pub fn features(&self, kind: &str) -> PathBuf {
        self.at(&["baselines", &format!("{kind}.feats")])
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.at(&["reports", &format!("{name}.txt")])
    }

    pub fn curve_csv(&self) -> PathBuf {
        self.at(&["reports", "sweep.csv"])
    }

    pub fn doc_vectors(&self, kind: &str) -> PathBuf {
        self.at(&["export", &format!("{kind}.docvec")])
    }
}

/// Which language of the pair a stage works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Side::Source),
            "target" => Ok(Side::Target),
            _ => Err(Error::invalid(format!("unknown language side {s:?} (expected source or target)"))),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    /// Parses config text, collecting every problem before failing.
    pub fn parse(text: &str) -> Result<Self> {
        let (cfg, errors) = Self::parse_collecting(text);
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Keys that fail to parse keep their defaults.
    fn parse_collecting(text: &str) -> (Self, Vec<String>) {
        let mut cfg = PipelineConfig::default();
        let mut errors = Vec::new();
        let mut seen: Vec<String> = Vec::new();
        for (n, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected `key = value`, got {line:?}", n + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                errors.push(format!("line {}: {key}: duplicate key", n + 1));
                continue;
            }
            seen.push(key.to_string());
            if let Err(e) = set_key(&mut cfg, key, value) {
                errors.push(format!("line {}: {key}: {e}", n + 1));
            }
        }
        (cfg, errors)
    }

    /// Parse, override, resolve and validate in one step, reporting parse
    /// and validation problems together.
    pub fn from_text(text: &str, overrides: &Overrides) -> Result<Self> {
        let (mut cfg, mut errors) = Self::parse_collecting(text);
        cfg.resolve(overrides);
        errors.extend(cfg.violations());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// [`PipelineConfig::from_text`] on a file; an unreadable file is a
    /// config error.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read config {}: {e}", path.display())]))?;
        Self::from_text(&text, overrides)
    }

    /// Applies overrides, fills derived defaults and checks every value.
    pub fn finalize(mut self, overrides: &Overrides) -> Result<Self> {
        self.resolve(overrides);
        let errors = self.violations();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(Error::Config(errors))
        }
    }

    fn resolve(&mut self, overrides: &Overrides) {
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(w) = overrides.workers {
            self.workers = w;
        }
        if let Some(o) = &overrides.out_dir {
            self.paths.out_dir = o.clone();
        }
        let layout = self.layout();
        let fill = |p: &mut PathBuf, default: PathBuf| {
            if p.as_os_str().is_empty() {
                *p = default;
            }
        };
        fill(&mut self.paths.source_posts, layout.synth_posts(Side::Source));
        fill(&mut self.paths.source_statuses, layout.synth_statuses(Side::Source));
        fill(&mut self.paths.target_posts, layout.synth_posts(Side::Target));
        fill(&mut self.paths.target_statuses, layout.synth_statuses(Side::Target));
        fill(&mut self.paths.dictionary, layout.synth_dictionary("train"));
        fill(&mut self.paths.eval_dictionary, layout.synth_dictionary("eval"));
        self.embedding.target_epochs.get_or_insert(self.embedding.epochs);
    }

    fn violations(&self) -> Vec<String> {
        let mut errs: Vec<String> = Vec::new();
        let mut need = |ok: bool, key: &str, msg: &str| {
            if !ok {
                errs.push(format!("{key}: {msg}"));
            }
        };
        let e = &self.embedding;
        need(self.workers >= 1, "workers", "must be at least 1");
        need(self.paths.out_dir.as_os_str().len() > 0, "paths.out_dir", "must not be empty");
        need(
            self.corpus.train_fraction > 0.0 && self.corpus.train_fraction < 1.0,
            "corpus.train_fraction",
            "must lie strictly between 0 and 1",
        );
        need(!self.corpus.source_language.is_empty(), "corpus.source_language", "must not be empty");
        need(!self.corpus.target_language.is_empty(), "corpus.target_language", "must not be empty");
        need(e.dim >= 1, "embedding.dim", "must be a positive integer");
        need(e.initial_lr > 0.0, "embedding.lr", "must be positive");
        need(e.window >= 1, "embedding.window", "must be at least 1");
        need(e.negatives >= 1, "embedding.negatives", "must be at least 1");
        need(e.subsample_t > 0.0, "embedding.subsample_t", "must be positive");
        need(e.min_count >= 1, "embedding.min_count", "must be at least 1");
        need(e.ngram_min >= 1 && e.ngram_min <= e.ngram_max, "embedding.ngram_min", "must satisfy 1 <= ngram_min <= ngram_max");
        need(e.buckets >= 1, "embedding.buckets", "must be at least 1");
        need(self.align.csls_k >= 1, "align.csls_k", "must be at least 1");
        need(self.align.top_k_vocab >= 1, "align.top_k_vocab", "must be at least 1");
        need(self.classifier.epochs >= 1, "classifier.epochs", "must be at least 1");
        need(self.classifier.initial_lr > 0.0, "classifier.lr", "must be positive");
        need(self.classifier.word_ngrams >= 1, "classifier.word_ngrams", "must be at least 1");
        need(self.baseline.max_features >= 1, "baseline.max_features", "must be at least 1");
        need(self.baseline.l2_lambda >= 0.0, "baseline.l2_lambda", "must be non-negative");
        need(self.baseline.lr > 0.0, "baseline.lr", "must be positive");
        need(self.external.lr > 0.0, "external.lr", "must be positive");
        need(self.external.batch_size >= 1, "external.batch_size", "must be at least 1");
        need(!self.sweep.fractions.is_empty(), "sweep.fractions", "must list at least one fraction");
        need(
            self.sweep.fractions.iter().all(|f| *f > 0.0 && *f <= 1.0),
            "sweep.fractions",
            "every fraction must lie in (0, 1]",
        );
        need(!self.sweep.seeds.is_empty(), "sweep.seeds", "must list at least one seed");
        if let Err(Error::Config(list)) = self.synth.generator.validate() {
            errs.extend(list.into_iter().map(|m| format!("synth: {m}")));
        }
        errs
    }

    pub fn layout(&self) -> ArtifactLayout {
        ArtifactLayout::new(&self.paths.out_dir)
    }

    /// `(key, value)` for every key, defaults materialized.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        echo_entries(self)
    }

    /// The echo as config text; parsing it yields this config again.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.echo() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn subwords(&self) -> Result<SubwordIndex> {
        SubwordIndex::new(self.embedding.ngram_min, self.embedding.ngram_max, self.embedding.buckets)
    }

    pub fn skipgram(&self, side: Side) -> Result<SkipgramConfig> {
        let e = &self.embedding;
        Ok(SkipgramConfig {
            dim: e.dim,
            epochs: match side {
                Side::Source => e.epochs,
                Side::Target => e.target_epochs.unwrap_or(e.epochs),
            },
            initial_lr: e.initial_lr,
            window: e.window,
            negatives: e.negatives,
            subsample_t: e.subsample_t,
            min_count: e.min_count,
            subwords: self.subwords()?,
            seed: self.seed,
            workers: self.workers,
        })
    }

    pub fn supervised(&self) -> Result<SupervisedConfig> {
        let c = &self.classifier;
        Ok(SupervisedConfig {
            dim: self.embedding.dim,
            epochs: c.epochs,
            initial_lr: c.initial_lr,
            min_count: c.min_count,
            word_ngrams: c.word_ngrams,
            subwords: self.subwords()?,
            freeze_pretrained: c.freeze_pretrained,
            seed: self.seed,
            workers: self.workers,
        })
    }

    pub fn refine(&self) -> RefineConfig {
        RefineConfig {
            iterations: self.align.iterations,
            csls_k: self.align.csls_k,
            top_k_vocab: self.align.top_k_vocab,
        }
    }

    pub fn logreg(&self) -> LogRegConfig {
        LogRegConfig {
            l2_lambda: self.baseline.l2_lambda,
            epochs: self.baseline.epochs,
            lr: self.baseline.lr,
            seed: self.seed,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.external.lr,
            epochs: self.external.epochs,
            batch_size: self.external.batch_size,
            seed: self.seed,
            ..AdamConfig::default()
        }
    }
}

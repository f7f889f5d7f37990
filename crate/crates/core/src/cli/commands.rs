//! One function per pipeline stage. Stages talk to each other only through
//! files in the [`ArtifactLayout`], so any stage can be re-run on its own.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use super::config::{ArtifactLayout, PipelineConfig, Side};
use super::manifest::{self, sha256_hex, ManifestEntry};
use crate::align::{refine, BilingualDictionary, DictionaryRole};
use crate::baselines::{predict_logreg, train_logreg, BaselineKind, FeatureVocabulary};
use crate::classifier::{import_external_features, train_softmax_head, train_supervised, FeatureTable, TextClassifier};
use crate::corpus::{
    aggregate_by_account, filter_language, ingest_posts, parse_statuses, read_documents, split, write_documents,
    write_posts, write_statuses, AccountDocument, Label, SplitSpec,
};
use crate::embedding::{train_skipgram, WordVectors};
use crate::error::{Error, Result};
use crate::eval::{
    binary_metrics, confusion, evaluate_classifier, generate_synthetic_bilingual, labeled_tokens, learning_curve,
    to_posts, CsvBlock, CurveConfig, ModelKind, Report, Section,
};
use crate::transfer::pretrained_target_vectors;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineChoice {
    Sparse(BaselineKind),
    External,
}

impl fmt::Display for BaselineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineChoice::Sparse(k) => f.write_str(k.as_str()),
            BaselineChoice::External => f.write_str("external"),
        }
    }
}

impl FromStr for BaselineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "external" {
            Ok(BaselineChoice::External)
        } else {
            s.parse().map(BaselineChoice::Sparse)
        }
    }
}

/// A pipeline stage with its stage-specific arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Ingest,
    TrainEmbeddings(Side),
    Align,
    TrainClassifier(ModelKind),
    Evaluate(ModelKind),
    Baseline(BaselineChoice),
    Sweep,
    ExportVectors(ModelKind),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest => "ingest",
            Command::TrainEmbeddings(_) => "train-embeddings",
            Command::Align => "align",
            Command::TrainClassifier(_) => "train-classifier",
            Command::Evaluate(_) => "evaluate",
            Command::Baseline(_) => "baseline",
            Command::Sweep => "sweep",
            Command::ExportVectors(_) => "export-vectors",
        }
    }

    /// The stage as it would be typed after the global flags.
    pub fn args(&self) -> String {
        match self {
            Command::TrainEmbeddings(side) => format!("{} --lang {side}", self.name()),
            Command::TrainClassifier(k) | Command::Evaluate(k) | Command::ExportVectors(k) => {
                format!("{} --kind {k}", self.name())
            }
            Command::Baseline(k) => format!("{} --kind {k}", self.name()),
            _ => self.name().to_string(),
        }
    }
}

/// Tracks what a stage reads and writes for the manifest.
struct Stage<'a> {
    cfg: &'a PipelineConfig,
    layout: ArtifactLayout,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Stage<'a> {
    fn new(cfg: &'a PipelineConfig) -> Self {
        Stage {
            cfg,
            layout: cfg.layout(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Fails with every missing path at once.
    fn require(&mut self, paths: &[PathBuf]) -> Result<()> {
        let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.is_file()).cloned().collect();
        if !missing.is_empty() {
            return Err(Error::MissingArtifacts(missing));
        }
        self.inputs.extend(paths.iter().cloned());
        Ok(())
    }

    fn open(&self, path: &Path) -> Result<BufReader<File>> {
        File::open(path).map(BufReader::new).map_err(|e| Error::io_path(path, e))
    }

    fn write_with(&mut self, path: PathBuf, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io_path(dir, e))?;
        }
        let mut w = File::create(&path).map(BufWriter::new).map_err(|e| Error::io_path(&path, e))?;
        body(&mut w)?;
        w.flush().map_err(|e| Error::io_path(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_text(&mut self, path: PathBuf, text: &str) -> Result<()> {
        self.write_with(path, |w| w.write_all(text.as_bytes()).map_err(Error::from))
    }

    /// Writes `report` under `name` with the effective config appended.
    fn write_report(&mut self, name: &str, mut report: Report) -> Result<()> {
        let mut echo = Section::new("config");
        for (k, v) in self.cfg.echo() {
            echo.set(k, v);
        }
        report.push(echo);
        let text = report.to_text();
        self.write_text(self.layout.report(name), &text)
    }

    fn documents(&mut self, side: Side, parts: &[&str]) -> Result<Vec<Vec<AccountDocument>>> {
        let paths: Vec<PathBuf> = parts.iter().map(|p| self.layout.documents(side, p)).collect();
        self.require(&paths)?;
        paths.iter().map(|p| read_documents(self.open(p)?)).collect()
    }

    fn vectors(&self, path: &Path) -> Result<WordVectors> {
        WordVectors::load_with_dim(self.open(path)?, self.cfg.embedding.dim).map_err(|e| e.context(path.display().to_string()))
    }
}

/// Runs `command` and appends its manifest line.
pub fn run(command: Command, cfg: &PipelineConfig, config_path: &Path) -> Result<()> {
    let start = Instant::now();
    let mut stage = Stage::new(cfg);
    match command {
        Command::Synth => synth(&mut stage),
        Command::Ingest => ingest(&mut stage),
        Command::TrainEmbeddings(side) => train_embeddings(&mut stage, side),
        Command::Align => align(&mut stage),
        Command::TrainClassifier(kind) => train_classifier(&mut stage, kind),
        Command::Evaluate(kind) => evaluate(&mut stage, kind),
        Command::Baseline(kind) => baseline(&mut stage, kind),
        Command::Sweep => sweep(&mut stage),
        Command::ExportVectors(kind) => export_vectors(&mut stage, kind),
    }
    .map_err(|e| match e {
        Error::MissingArtifacts(_) | Error::Config(_) => e,
        other => other.context(command.name()),
    })?;
    let entry = ManifestEntry {
        command: command.name().to_string(),
        args: command.args(),
        config_path: config_path.to_path_buf(),
        config_sha256: sha256_hex(&cfg.to_text()),
        seed: cfg.seed,
        inputs: stage.inputs,
        outputs: stage.outputs,
        wall_ms: start.elapsed().as_millis(),
    };
    manifest::append(&stage.layout.manifest(), &entry)
}

fn count_positive(docs: &[AccountDocument]) -> usize {
    docs.iter().filter(|d| d.label.is_positive()).count()
}

fn synth(stage: &mut Stage) -> Result<()> {
    let cfg = stage.cfg;
    let g = &cfg.synth.generator;
    let data = generate_synthetic_bilingual(g, cfg.seed)?;
    let sides = [
        (Side::Source, &data.source, &cfg.corpus.source_language),
        (Side::Target, &data.target, &cfg.corpus.target_language),
    ];
    let mut report = Report::new();
    for (side, docs, lang) in sides {
        let (posts, statuses) = to_posts(docs, lang, g.posts_per_account, cfg.seed);
        stage.write_with(stage.layout.synth_posts(side), |w| write_posts(w, &posts))?;
        stage.write_with(stage.layout.synth_statuses(side), |w| write_statuses(w, &statuses))?;
        let mut s = Section::new(format!("synth.{side}"));
        s.set("accounts", docs.len()).set("suspended", count_positive(docs)).set("posts", posts.len());
        report.push(s);
    }
    let (train, eval) = data.split_dictionary(cfg.synth.dictionary_train, cfg.synth.dictionary_eval, cfg.seed)?;
    stage.write_with(stage.layout.synth_dictionary("train"), |w| train.write(w))?;
    stage.write_with(stage.layout.synth_dictionary("eval"), |w| eval.write(w))?;
    let mut s = Section::new("synth.dictionary");
    s.set("train_pairs", train.len())
        .set("eval_pairs", eval.len())
        .set("signal_words", data.signal_words.len());
    report.push(s);
    stage.write_report("synth", report)
}

fn ingest(stage: &mut Stage) -> Result<()> {
    let cfg = stage.cfg;
    let p = &cfg.paths;
    stage.require(&[
        p.source_posts.clone(),
        p.source_statuses.clone(),
        p.target_posts.clone(),
        p.target_statuses.clone(),
    ])?;
    let sides = [
        (Side::Source, &p.source_posts, &p.source_statuses, &cfg.corpus.source_language),
        (Side::Target, &p.target_posts, &p.target_statuses, &cfg.corpus.target_language),
    ];
    let spec = SplitSpec {
        train_fraction: cfg.corpus.train_fraction,
        seed: cfg.seed,
    };
    let mut report = Report::new();
    for (side, posts_path, statuses_path, lang) in sides {
        let read = ingest_posts(stage.open(posts_path)?).map_err(|e| e.context(posts_path.display().to_string()))?;
        let lines = read.lines_read();
        let malformed = read.malformed.len();
        for m in read.malformed.iter().take(5) {
            log::warn!("{}:{}: {}", posts_path.display(), m.line_no, m.reason);
        }
        let records = filter_language(read.records, lang);
        let kept = records.len();
        let statuses =
            parse_statuses(stage.open(statuses_path)?).map_err(|e| e.context(statuses_path.display().to_string()))?;
        let docs = aggregate_by_account(&records, &statuses)?;
        let (train, test) = split(&docs, spec)?;
        stage.write_with(stage.layout.documents(side, "train"), |w| write_documents(w, &train))?;
        stage.write_with(stage.layout.documents(side, "test"), |w| write_documents(w, &test))?;
        let mut s = Section::new(format!("ingest.{side}"));
        s.set("lines", lines)
            .set("malformed", malformed)
            .set("posts_in_language", kept)
            .set("accounts", docs.len())
            .set("suspended", count_positive(&docs))
            .set("train", train.len())
            .set("test", test.len());
        report.push(s);
    }
    stage.write_report("ingest", report)
}

fn train_embeddings(stage: &mut Stage, side: Side) -> Result<()> {
    // the embedding objective uses no labels, so test text is fair game
    let docs: Vec<AccountDocument> = stage.documents(side, &["train", "test"])?.concat();
    let corpus: Vec<Vec<&str>> = docs.iter().map(|d| d.tokens()).collect();
    let config = stage.cfg.skipgram(side)?;
    let model = train_skipgram(&corpus, &config)?;
    let vectors = model.word_vectors();
    stage.write_with(stage.layout.checkpoint(side), |w| model.write_checkpoint(w))?;
    stage.write_with(stage.layout.vectors(side), |w| vectors.save(w))?;
    let mut report = Report::new();
    let mut s = Section::new(format!("embeddings.{side}"));
    s.set("documents", docs.len())
        .set("tokens", corpus.iter().map(Vec::len).sum::<usize>())
        .set("words", vectors.len())
        .set("dim", vectors.dim())
        .set("epochs", config.epochs);
    report.push(s);
    stage.write_report(&format!("embeddings.{side}"), report)
}

fn align(stage: &mut Stage) -> Result<()> {
    let cfg = stage.cfg;
    let source_path = stage.layout.vectors(Side::Source);
    let target_path = stage.layout.vectors(Side::Target);
    stage.require(&[source_path.clone(), target_path.clone(), cfg.paths.dictionary.clone()])?;
    let eval = if cfg.paths.eval_dictionary.is_file() {
        stage.require(std::slice::from_ref(&cfg.paths.eval_dictionary))?;
        Some(BilingualDictionary::read(stage.open(&cfg.paths.eval_dictionary)?, DictionaryRole::Eval)?)
    } else {
        log::warn!("no evaluation dictionary at {}; skipping precision@1", cfg.paths.eval_dictionary.display());
        None
    };
    let source = stage.vectors(&source_path)?;
    let target = stage.vectors(&target_path)?;
    let seed = BilingualDictionary::read(stage.open(&cfg.paths.dictionary)?, DictionaryRole::Train)?;
    let alignment = refine(&source, &target, &seed, &cfg.refine(), eval.as_ref())?;
    let transfer = pretrained_target_vectors(&source, &target, &alignment.map, cfg.align.transfer_vectors, cfg.align.csls_k)?;
    stage.write_with(stage.layout.map(), |w| alignment.map.save(w))?;
    stage.write_with(stage.layout.transfer_vectors(), |w| transfer.save(w))?;

    let mut steps = CsvBlock::new(&["iteration", "dictionary_size", "precision_at_1"]);
    for step in &alignment.steps {
        steps.push(vec![
            step.iteration.to_string(),
            step.dictionary_size.to_string(),
            step.precision_at_1.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    let mut s = Section::new("align");
    s.set("seed_pairs", seed.len())
        .set("seed_pairs_dropped", alignment.seed_pairs_dropped)
        .set("eval_pairs", eval.as_ref().map_or(0, BilingualDictionary::len))
        .set("transfer_vectors", cfg.align.transfer_vectors)
        .set("transfer_words", transfer.len());
    if let Some(p) = alignment.steps.last().and_then(|s| s.precision_at_1) {
        s.set("precision_at_1", p);
    }
    s.csv = Some(steps);
    let mut report = Report::new();
    report.push(s);
    stage.write_report("align", report)
}

fn load_classifier(stage: &mut Stage, kind: ModelKind) -> Result<TextClassifier> {
    let path = stage.layout.classifier(kind.as_str());
    stage.require(std::slice::from_ref(&path))?;
    TextClassifier::read(stage.open(&path)?).map_err(|e| e.context(path.display().to_string()))
}

fn train_classifier(stage: &mut Stage, kind: ModelKind) -> Result<()> {
    let pretrained = match kind {
        ModelKind::Monolingual => None,
        ModelKind::Transfer => {
            let path = stage.layout.transfer_vectors();
            stage.require(std::slice::from_ref(&path))?;
            Some(stage.vectors(&path)?)
        }
    };
    let train = stage.documents(Side::Target, &["train"])?.concat();
    let model = train_supervised(&labeled_tokens(&train), &stage.cfg.supervised()?, pretrained.as_ref())?;
    stage.write_with(stage.layout.classifier(kind.as_str()), |w| model.write(w))
}

fn evaluate(stage: &mut Stage, kind: ModelKind) -> Result<()> {
    let model = load_classifier(stage, kind)?;
    let test = stage.documents(Side::Target, &["test"])?.concat();
    let metrics = evaluate_classifier(&model, &test)?;
    let mut report = Report::new();
    let mut s = Section::new("evaluate");
    s.set("kind", kind).set("test_documents", test.len());
    report.push(s);
    report.push_metrics("metrics", &metrics);
    stage.write_report(&format!("evaluate.{kind}"), report)
}

fn baseline(stage: &mut Stage, choice: BaselineChoice) -> Result<()> {
    let cfg = stage.cfg;
    let external = cfg.paths.external_features.clone();
    if choice == BaselineChoice::External && external.as_os_str().is_empty() {
        return Err(Error::Config(vec!["paths.external_features: required by baseline --kind external".into()]));
    }
    let parts = stage.documents(Side::Target, &["train", "test"])?;
    let (train, test) = (&parts[0], &parts[1]);
    let actual: Vec<Label> = test.iter().map(|d| d.label).collect();
    let mut s = Section::new("baseline");
    s.set("kind", choice).set("train_documents", train.len()).set("test_documents", test.len());
    let predicted: Vec<Label> = match choice {
        BaselineChoice::Sparse(kind) => {
            let (lo, hi) = kind.ngram_range();
            let train_tokens: Vec<Vec<&str>> = train.iter().map(|d| d.tokens()).collect();
            let test_tokens: Vec<Vec<&str>> = test.iter().map(|d| d.tokens()).collect();
            let vocab = FeatureVocabulary::build(&train_tokens, lo, hi, cfg.baseline.max_features)?;
            let xs = vocab.vectorize_all(&train_tokens, kind.uses_tfidf())?;
            let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
            let model = train_logreg(&xs, &labels, vocab.len(), &cfg.logreg())?;
            stage.write_with(stage.layout.features(kind.as_str()), |w| vocab.write_dump(w))?;
            s.set("features", vocab.len());
            vocab
                .vectorize_all(&test_tokens, kind.uses_tfidf())?
                .iter()
                .map(|x| predict_logreg(&model, x).0)
                .collect()
        }
        BaselineChoice::External => {
            stage.require(std::slice::from_ref(&external))?;
            let table = FeatureTable::load(stage.open(&external)?).map_err(|e| e.context(external.display().to_string()))?;
            let accounts = |docs: &[AccountDocument]| -> Vec<(String, Label)> {
                docs.iter().map(|d| (d.account_id.clone(), d.label)).collect()
            };
            let train_data = import_external_features(&table, &accounts(train))?;
            let test_data = import_external_features(&table, &accounts(test))?;
            let head = train_softmax_head(&train_data, &cfg.adam())?;
            s.set("features", table.dim());
            test_data.iter().map(|(x, _)| head.predict(x).label).collect()
        }
    };
    let metrics = binary_metrics(&confusion(&predicted, &actual)?);
    let mut report = Report::new();
    report.push(s);
    report.push_metrics("metrics", &metrics);
    stage.write_report(&format!("baseline.{choice}"), report)
}

fn sweep(stage: &mut Stage) -> Result<()> {
    let cfg = stage.cfg;
    let path = stage.layout.transfer_vectors();
    stage.require(std::slice::from_ref(&path))?;
    let pretrained = stage.vectors(&path)?;
    let parts = stage.documents(Side::Target, &["train", "test"])?;
    let curve_config = CurveConfig {
        fractions: cfg.sweep.fractions.clone(),
        seeds: cfg.sweep.seeds.clone(),
        kinds: vec![ModelKind::Monolingual, ModelKind::Transfer],
        classifier: cfg.supervised()?,
    };
    let curve = learning_curve(&parts[0], &parts[1], Some(&pretrained), &curve_config)?;
    let points = curve.to_csv();
    stage.write_text(stage.layout.curve_csv(), &points.to_csv())?;

    let mut summary = Section::new("sweep");
    summary
        .set("train_documents", parts[0].len())
        .set("test_documents", parts[1].len())
        .set("points", curve.points.len());
    for &fraction in &cfg.sweep.fractions {
        if let (Some(m), Some(t)) =
            (curve.mean(fraction, ModelKind::Monolingual), curve.mean(fraction, ModelKind::Transfer))
        {
            summary.set(format!("gap_at_{fraction}"), t.f1 - m.f1);
        }
    }
    let mut means = Section::new("means");
    means.csv = Some(curve.means_csv());
    let mut all = Section::new("points");
    all.csv = Some(points);
    let mut report = Report::new();
    report.push(summary);
    report.push(means);
    report.push(all);
    stage.write_report("sweep", report)
}

fn export_vectors(stage: &mut Stage, kind: ModelKind) -> Result<()> {
    let model = load_classifier(stage, kind)?;
    let docs = stage.documents(Side::Target, &["train", "test"])?.concat();
    let mut table = FeatureTable::new(model.dim());
    for d in &docs {
        let v: Vec<f64> = model.doc_embedding(&d.tokens()).iter().map(|&x| f64::from(x)).collect();
        table.push(d.account_id.clone(), &v)?;
    }
    stage.write_with(stage.layout.doc_vectors(kind.as_str()), |w| table.save(w))
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xlingual::cli::manifest;
use xlingual::eval::Report;

const SMALL_RUN: &str = "\
# tiny end-to-end run
embedding.dim = 16
embedding.epochs = 2
embedding.buckets = 5000
embedding.subsample_t = 0.001
classifier.epochs = 5
baseline.epochs = 20
external.epochs = 5
sweep.fractions = 0.5, 1.0
sweep.seeds = 0, 1
synth.vocab_size = 300
synth.signal_words = 30
synth.signal_rate = 0.005
synth.signal_lift = 10
synth.phrase_len = 2
synth.source_docs = 300
synth.target_docs = 100
synth.dictionary_train = 100
synth.dictionary_eval = 50
";

struct Run {
    _dir: tempfile::TempDir,
    config: PathBuf,
    out: PathBuf,
}

impl Run {
    fn new(config_text: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.conf");
        std::fs::write(&config, config_text).unwrap();
        let out = dir.path().join("out");
        Run { _dir: dir, config, out }
    }

    fn exec(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_xlingual"))
            .arg("--config")
            .arg(&self.config)
            .arg("--out")
            .arg(&self.out)
            .args(args)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) {
        let out = self.exec(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }

    fn report(&self, name: &str) -> Report {
        let text = std::fs::read_to_string(self.out.join("reports").join(format!("{name}.txt"))).unwrap();
        let report = Report::parse(&text).unwrap();
        assert_eq!(report.to_text(), text);
        report
    }
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn full_synthetic_pipeline() {
    let run = Run::new(SMALL_RUN);
    for args in [
        &["synth"][..],
        &["ingest"],
        &["train-embeddings", "--lang", "source"],
        &["train-embeddings", "--lang", "target"],
        &["align"],
        &["train-classifier", "--kind", "transfer"],
        &["evaluate", "--kind", "transfer"],
        &["train-classifier", "--kind", "monolingual"],
        &["evaluate", "--kind", "monolingual"],
        &["baseline", "--kind", "bow"],
        &["sweep"],
        &["export-vectors", "--kind", "transfer"],
    ] {
        run.ok(args);
    }

    let evaluate = run.report("evaluate.transfer");
    let metrics = evaluate.metrics("metrics").unwrap();
    assert_eq!(metrics.confusion.total(), 20);
    let config = evaluate.section("config").unwrap();
    assert_eq!(config.get("embedding.dim"), Some("16"));
    assert_eq!(config.get("classifier.lr"), Some("1"));
    assert_eq!(config.get("embedding.target_epochs"), Some("2"));
    assert_eq!(config.entries.len(), xlingual::cli::CONFIG_KEYS.len());

    let align = run.report("align");
    let steps = align.section("align").unwrap().csv.as_ref().unwrap();
    assert_eq!(steps.rows.len(), 6);

    let sweep = run.report("sweep");
    let means = sweep.section("means").unwrap().csv.as_ref().unwrap();
    assert_eq!(means.rows.len(), 4);
    let csv = std::fs::read_to_string(run.out.join("reports").join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);

    let table = xlingual::classifier::FeatureTable::load(
        std::io::BufReader::new(std::fs::File::open(run.out.join("export").join("transfer.docvec")).unwrap()),
    )
    .unwrap();
    assert_eq!((table.len(), table.dim()), (100, 16));

    let entries = manifest::read(&run.out.join("manifest.log")).unwrap();
    assert_eq!(entries.len(), 12);
    assert_eq!(entries[2].args, "train-embeddings --lang source");
    assert!(entries.iter().all(|e| e.config_sha256 == entries[0].config_sha256 && e.seed == 0));
    assert!(entries[4].inputs.iter().any(|p| p.ends_with("source.vec")));
    assert!(entries[4].outputs.iter().any(|p| p.ends_with("map.xlmap")));
}

#[test]
fn external_features_baseline() {
    let run = Run::new(SMALL_RUN);
    run.ok(&["synth"]);
    run.ok(&["ingest"]);
    let missing = run.exec(&["baseline", "--kind", "external"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("paths.external_features"));

    // features leak the label, so the head must separate the classes
    let mut table = xlingual::classifier::FeatureTable::new(2);
    for part in ["train", "test"] {
        let f = std::fs::File::open(run.out.join("corpus").join(format!("target.{part}.tsv"))).unwrap();
        for d in xlingual::corpus::read_documents(std::io::BufReader::new(f)).unwrap() {
            let y = if d.label.is_positive() { 1.0 } else { -1.0 };
            table.push(d.account_id, &[y, 0.5]).unwrap();
        }
    }
    let features = run.out.join("features.txt");
    let mut buf = Vec::new();
    table.save(&mut buf).unwrap();
    std::fs::write(&features, buf).unwrap();
    let text = format!("{}paths.external_features = {}\nexternal.lr = 0.05\nexternal.epochs = 50\n", SMALL_RUN.replace("external.epochs = 5\n", ""), features.display());
    std::fs::write(&run.config, text).unwrap();
    run.ok(&["baseline", "--kind", "external"]);
    let m = run.report("baseline.external").metrics("metrics").unwrap();
    assert_eq!(m.f1, 1.0);
}

#[test]
fn align_without_embeddings_names_missing_files() {
    let run = Run::new(SMALL_RUN);
    run.ok(&["synth"]);
    let out = run.exec(&["align"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    let source = run.out.join("embeddings").join("source.vec");
    let target = run.out.join("embeddings").join("target.vec");
    assert!(err.contains(&source.display().to_string()), "{err}");
    assert!(err.contains(&target.display().to_string()), "{err}");
    assert!(!Path::new(&run.out.join("manifest.log")).exists() || !std::fs::read_to_string(run.out.join("manifest.log")).unwrap().contains("command=align"));
}

#[test]
fn config_errors_exit_with_one_and_name_keys() {
    let run = Run::new("embedding.dim = -1\nembedding.dmi = 100\n");
    let out = run.exec(&["synth"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("embedding.dim") && err.contains("embedding.dmi"), "{err}");
    assert!(!run.out.exists());
}

#[test]
fn usage_errors() {
    let run = Run::new("");
    assert_eq!(run.exec(&["train-embeddings", "--lang", "klingon"]).status.code(), Some(1));
    assert_eq!(run.exec(&["frobnicate"]).status.code(), Some(1));
    let no_config = Command::new(env!("CARGO_BIN_EXE_xlingual")).arg("synth").output().unwrap();
    assert_eq!(no_config.status.code(), Some(1));
    let unreadable = Command::new(env!("CARGO_BIN_EXE_xlingual"))
        .args(["--config", "/nonexistent/run.conf", "synth"])
        .output()
        .unwrap();
    assert_eq!(unreadable.status.code(), Some(1));
}

#[test]
fn validate_config_prints_defaults() {
    let run = Run::new("");
    let out = run.exec(&["--seed", "7", "validate-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 7\n"));
    assert!(text.contains("embedding.dim = 100\n"));
    assert!(text.contains("baseline.max_features = 35000\n"));
    assert!(text.contains("align.iterations = 5\n"));
}

#[test]
fn runtime_failure_exits_with_two() {
    let run = Run::new(SMALL_RUN);
    run.ok(&["synth"]);
    std::fs::write(run.out.join("synth").join("target.statuses.tsv"), "not a status file\n").unwrap();
    let out = run.exec(&["ingest"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn reruns_are_byte_identical() {
    let run = Run::new(SMALL_RUN);
    let stages: [&[&str]; 6] = [
        &["synth"],
        &["ingest"],
        &["train-embeddings", "--lang", "source"],
        &["train-embeddings", "--lang", "target"],
        &["align"],
        &["train-classifier", "--kind", "transfer"],
    ];
    let files = [
        "synth/source.posts.tsv",
        "corpus/target.train.tsv",
        "embeddings/source.xlemb",
        "embeddings/target.vec",
        "align/map.xlmap",
        "align/transfer.vec",
        "reports/align.txt",
        "classifier/transfer.xlclf",
    ];
    let snapshot = |run: &Run| -> Vec<Vec<u8>> { files.iter().map(|f| std::fs::read(run.out.join(f)).unwrap()).collect() };
    for s in stages {
        run.ok(s);
    }
    let first = snapshot(&run);
    // a single stage re-run in place reproduces its artifacts
    run.ok(&["align"]);
    assert_eq!(snapshot(&run), first);
    for s in stages {
        run.ok(s);
    }
    assert_eq!(snapshot(&run), first);
    let entries = manifest::read(&run.out.join("manifest.log")).unwrap();
    assert_eq!(entries.len(), 13);
}

//! Post ingestion, per-account aggregation, labeling and splits.
//!
//! File layouts (all UTF-8, one record per line, tab separated):
//!
//! * posts: `account_id \t language_tag \t text`
//! * statuses: `account_id \t status` with status one of `active`,
//!   `suspended`, `not_found`, `protected`
//! * documents: `account_id \t label \t text`

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One post as read from the posts file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostRecord {
    pub account_id: String,
    pub language_tag: String,
    pub text: String,
}

/// Account status as returned by the platform lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccountStatus {
    Active,
    Suspended,
    NotFound,
    Protected,
}

impl AccountStatus {
    pub const ALL: [AccountStatus; 4] = [
        AccountStatus::Active,
        AccountStatus::Suspended,
        AccountStatus::NotFound,
        AccountStatus::Protected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AccountStatus::Active => "active",
            AccountStatus::Suspended => "suspended",
            AccountStatus::NotFound => "not_found",
            AccountStatus::Protected => "protected",
        }
    }
}

impl FromStr for AccountStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(AccountStatus::Active),
            "suspended" => Ok(AccountStatus::Suspended),
            "not_found" => Ok(AccountStatus::NotFound),
            "protected" => Ok(AccountStatus::Protected),
            other => Err(Error::format(format!("unknown account status {other:?}"))),
        }
    }
}

impl fmt::Display for AccountStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary class label. `Suspended` is the positive class (index 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotSuspended = 0,
    Suspended = 1,
}

impl Label {
    pub const NAMES: [&'static str; 2] = ["NotSuspended", "Suspended"];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Label::NotSuspended),
            1 => Ok(Label::Suspended),
            _ => Err(Error::format(format!("label must be 0 or 1, got {i}"))),
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Suspended
    }
}

impl From<bool> for Label {
    fn from(positive: bool) -> Self {
        if positive {
            Label::Suspended
        } else {
            Label::NotSuspended
        }
    }
}

/// Suspended accounts are the positive class; everything else is negative.
pub fn label_from_status(status: AccountStatus) -> Label {
    match status {
        AccountStatus::Suspended => Label::Suspended,
        AccountStatus::Active | AccountStatus::NotFound | AccountStatus::Protected => {
            Label::NotSuspended
        }
    }
}

/// One account's concatenated posts with its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountDocument {
    pub account_id: String,
    pub text: String,
    pub label: Label,
}

impl AccountDocument {
    pub fn tokens(&self) -> Vec<&str> {
        tokenize(&self.text)
    }
}

/// Whitespace tokenization with no other normalization: punctuation, URLs,
/// hashtags and mentions stay inside their tokens and case is preserved.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

pub fn tokenize_owned(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<PostRecord>,
    pub malformed: Vec<MalformedLine>,
}

impl IngestReport {
    pub fn lines_read(&self) -> usize {
        self.records.len() + self.malformed.len()
    }
}

fn parse_post_line(line: &str) -> std::result::Result<PostRecord, String> {
    let mut fields = line.splitn(3, '\t');
    let account_id = fields.next().unwrap_or("");
    let language_tag = fields.next().ok_or("missing language_tag field")?;
    let text = fields.next().ok_or("missing text field")?;
    if account_id.trim().is_empty() {
        return Err("empty account_id".into());
    }
    if text.trim().is_empty() {
        return Err("empty text".into());
    }
    Ok(PostRecord {
        account_id: account_id.to_owned(),
        language_tag: language_tag.to_owned(),
        text: text.to_owned(),
    })
}

/// Reads a posts file. Malformed lines are collected in the report; if more
/// than half of all lines are malformed the input is rejected outright.
pub fn ingest_posts<R: BufRead>(reader: R) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        match parse_post_line(line) {
            Ok(rec) => report.records.push(rec),
            Err(reason) => report.malformed.push(MalformedLine {
                line_no: i + 1,
                reason,
            }),
        }
    }
    if report.malformed.len() * 2 > report.lines_read() {
        return Err(Error::format(format!(
            "{} of {} lines are malformed (first: line {}: {}); is this a posts file?",
            report.malformed.len(),
            report.lines_read(),
            report.malformed[0].line_no,
            report.malformed[0].reason
        )));
    }
    for m in &report.malformed {
        log::warn!("skipping malformed post line {}: {}", m.line_no, m.reason);
    }
    Ok(report)
}

/// Keeps the records whose language tag equals `tag` exactly.
pub fn filter_language(records: Vec<PostRecord>, tag: &str) -> Vec<PostRecord> {
    records.into_iter().filter(|r| r.language_tag == tag).collect()
}

pub fn parse_statuses<R: BufRead>(reader: R) -> Result<HashMap<String, AccountStatus>> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, status) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(format!("status line {}: expected two fields", i + 1)))?;
        let status: AccountStatus = status
            .trim()
            .parse()
            .map_err(|e: Error| e.context(format!("status line {}", i + 1)))?;
        out.insert(id.to_owned(), status);
    }
    Ok(out)
}

pub fn write_statuses<W: Write>(mut w: W, statuses: &[(String, AccountStatus)]) -> Result<()> {
    for (id, s) in statuses {
        writeln!(w, "{id}\t{s}")?;
    }
    Ok(())
}

pub fn write_posts<W: Write>(mut w: W, posts: &[PostRecord]) -> Result<()> {
    for p in posts {
        writeln!(w, "{}\t{}\t{}", p.account_id, p.language_tag, p.text)?;
    }
    Ok(())
}

/// Joins each account's posts (in input order, single-space separated) into
/// one labeled document. Documents appear in order of each account's first
/// post.
pub fn aggregate_by_account(
    posts: &[PostRecord],
    statuses: &HashMap<String, AccountStatus>,
) -> Result<Vec<AccountDocument>> {
    let mut order: Vec<&str> = Vec::new();
    let mut texts: HashMap<&str, String> = HashMap::new();
    for p in posts {
        match texts.get_mut(p.account_id.as_str()) {
            Some(text) => {
                text.push(' ');
                text.push_str(&p.text);
            }
            None => {
                order.push(&p.account_id);
                texts.insert(&p.account_id, p.text.clone());
            }
        }
    }
    order
        .into_iter()
        .map(|id| {
            let status = statuses
                .get(id)
                .ok_or_else(|| Error::MissingStatus(id.to_owned()))?;
            Ok(AccountDocument {
                account_id: id.to_owned(),
                text: texts.remove(id).unwrap_or_default(),
                label: label_from_status(*status),
            })
        })
        .collect()
}

pub fn write_documents<W: Write>(mut w: W, docs: &[AccountDocument]) -> Result<()> {
    for d in docs {
        writeln!(w, "{}\t{}\t{}", d.account_id, d.label.index(), d.text)?;
    }
    Ok(())
}

pub fn read_documents<R: BufRead>(reader: R) -> Result<Vec<AccountDocument>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(label), Some(text)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::format(format!("documents line {}: expected 3 fields", i + 1)));
        };
        let label = match label {
            "0" => Label::NotSuspended,
            "1" => Label::Suspended,
            other => {
                return Err(Error::format(format!(
                    "documents line {}: bad label {other:?}",
                    i + 1
                )))
            }
        };
        if !seen.insert(id.to_owned()) {
            return Err(Error::format(format!(
                "documents line {}: duplicate account {id:?}",
                i + 1
            )));
        }
        out.push(AccountDocument {
            account_id: id.to_owned(),
            text: text.to_owned(),
            label,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

fn take_sorted<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    let mut idx = idx.to_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i].clone()).collect()
}

/// Seeded random train/test partition. Both halves keep the input order.
pub fn split<T: Clone>(documents: &[T], spec: SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    let n = documents.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 documents to split, got {n}")));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction must be in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    let perm = seeded_permutation(n, spec.seed);
    Ok((
        take_sorted(documents, &perm[..n_train]),
        take_sorted(documents, &perm[n_train..]),
    ))
}

/// Prefix of one seeded permutation, so for a fixed seed a smaller fraction
/// always selects a subset of a larger one.
pub fn subsample_train<T: Clone>(train: &[T], fraction: f64, seed: u64) -> Result<Vec<T>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0,1], got {fraction}")));
    }
    if fraction == 1.0 {
        return Ok(train.to_vec());
    }
    let k = (fraction * train.len() as f64).round() as usize;
    let perm = seeded_permutation(train.len(), seed);
    Ok(take_sorted(train, &perm[..k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn post(id: &str, text: &str) -> PostRecord {
        PostRecord {
            account_id: id.into(),
            language_tag: "en".into(),
            text: text.into(),
        }
    }

    #[test]
    fn ingest_counts_malformed_lines() {
        let ok = "u1\ten\thello\nu2\ten\tworld\nu3\tfr\tbonjour\n";
        let r = ingest_posts(ok.as_bytes()).unwrap();
        assert_eq!(r.records.len(), 3);
        assert!(r.malformed.is_empty());
        assert_eq!(r.records[2].language_tag, "fr");

        let bad = "u1\ten\thello\nu2\ten\nu3\ten\tthird\n";
        let r = ingest_posts(bad.as_bytes()).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.malformed.len(), 1);
        assert_eq!(r.malformed[0].line_no, 2);
        assert_eq!(r.malformed[0].reason, "missing text field");

        let r = ingest_posts("".as_bytes()).unwrap();
        assert!(r.records.is_empty() && r.malformed.is_empty());
    }

    #[test]
    fn ingest_rejects_mostly_malformed_input() {
        let junk = "a,b,c\nd,e,f\nu1\ten\tok\n";
        assert!(matches!(ingest_posts(junk.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn tokenize_splits_on_whitespace_only() {
        assert_eq!(
            tokenize("Vote #trump NOW http://x.co"),
            vec!["Vote", "#trump", "NOW", "http://x.co"]
        );
        assert_eq!(tokenize("a  b"), vec!["a", "b"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("@user,\u{3000}RT!"), vec!["@user,", "RT!"]);
    }

    #[test]
    fn status_labels() {
        assert_eq!(label_from_status(AccountStatus::Suspended), Label::Suspended);
        assert_eq!(label_from_status(AccountStatus::NotFound), Label::NotSuspended);
        assert_eq!(label_from_status(AccountStatus::Active), Label::NotSuspended);
        let negatives = AccountStatus::ALL
            .iter()
            .filter(|&&s| label_from_status(s) == Label::NotSuspended)
            .count();
        assert_eq!(negatives, 3);
        for s in AccountStatus::ALL {
            assert_eq!(s.as_str().parse::<AccountStatus>().unwrap(), s);
        }
        assert!("deleted".parse::<AccountStatus>().is_err());
    }

    #[test]
    fn parse_statuses_rejects_unknown() {
        let m = parse_statuses("u1\tsuspended\nu2\tprotected\n".as_bytes()).unwrap();
        assert_eq!(m["u1"], AccountStatus::Suspended);
        assert!(parse_statuses("u1\tbanned\n".as_bytes()).is_err());
    }

    #[test]
    fn aggregate_concatenates_in_order() {
        let posts = vec![post("u1", "a"), post("u2", "b"), post("u1", "c")];
        let statuses = HashMap::from([
            ("u1".to_string(), AccountStatus::Suspended),
            ("u2".to_string(), AccountStatus::Active),
        ]);
        let docs = aggregate_by_account(&posts, &statuses).unwrap();
        assert_eq!(
            docs,
            vec![
                AccountDocument {
                    account_id: "u1".into(),
                    text: "a c".into(),
                    label: Label::Suspended
                },
                AccountDocument {
                    account_id: "u2".into(),
                    text: "b".into(),
                    label: Label::NotSuspended
                },
            ]
        );

        let single = aggregate_by_account(&posts[1..2], &statuses).unwrap();
        assert_eq!(single[0].text, "b");

        let missing = vec![post("ghost", "boo")];
        match aggregate_by_account(&missing, &statuses) {
            Err(Error::MissingStatus(id)) => assert_eq!(id, "ghost"),
            other => panic!("expected MissingStatus, got {other:?}"),
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let docs: Vec<u32> = (0..10).collect();
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 7,
        };
        let (train, test) = split(&docs, spec).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert!(train.iter().all(|d| !test.contains(d)));
        assert_eq!(split(&docs, spec).unwrap(), (train.clone(), test.clone()));

        // Different seeds give different partitions of equal size; checked
        // over several seed pairs since any single pair could collide.
        let differing = (0..10u64)
            .filter(|&s| {
                let a = split(&docs, SplitSpec { seed: s, ..spec }).unwrap();
                let b = split(&docs, SplitSpec { seed: s + 100, ..spec }).unwrap();
                assert_eq!(a.0.len(), b.0.len());
                a != b
            })
            .count();
        assert!(differing >= 9);

        assert!(split(&docs[..1], spec).is_err());
    }

    #[test]
    fn subsample_sizes() {
        let train: Vec<u32> = (0..100).collect();
        let s = subsample_train(&train, 0.1, 3).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|x| train.contains(x)));
        assert_eq!(subsample_train(&train, 1.0, 3).unwrap(), train);
        assert!(subsample_train(&train, 0.0, 3).is_err());
        assert!(subsample_train(&train, 1.5, 3).is_err());
    }

    #[test]
    fn documents_file_round_trip() {
        let docs = vec![
            AccountDocument {
                account_id: "u1".into(),
                text: "a  b\u{00e9} #x".into(),
                label: Label::Suspended,
            },
            AccountDocument {
                account_id: "u2".into(),
                text: "c".into(),
                label: Label::NotSuspended,
            },
        ];
        let mut buf = Vec::new();
        write_documents(&mut buf, &docs).unwrap();
        assert_eq!(read_documents(buf.as_slice()).unwrap(), docs);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..60, frac in 0.05f64..0.95, seed: u64) {
            let docs: Vec<usize> = (0..n).collect();
            let (train, test) = split(&docs, SplitSpec { train_fraction: frac, seed }).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, docs);
            prop_assert_eq!(train.len(), (frac * n as f64).round() as usize);
        }

        #[test]
        fn subsamples_nest(n in 1usize..200, seed: u64) {
            let train: Vec<usize> = (0..n).collect();
            let small: HashSet<usize> = subsample_train(&train, 0.1, seed).unwrap().into_iter().collect();
            let large: HashSet<usize> = subsample_train(&train, 0.3, seed).unwrap().into_iter().collect();
            prop_assert!(small.is_subset(&large));
        }

        #[test]
        fn tokenize_inverts_join(tokens in proptest::collection::vec("[^\\s]{1,8}", 0..12)) {
            let joined = tokens.join(" ");
            let back: Vec<String> = tokenize_owned(&joined);
            prop_assert_eq!(back, tokens);
        }

        #[test]
        fn aggregation_preserves_word_multisets(
            posts in proptest::collection::vec((0u8..4, "[a-c]{1,3}( [a-c]{1,3}){0,3}"), 1..20)
        ) {
            let records: Vec<PostRecord> =
                posts.iter().map(|(u, t)| post(&format!("u{u}"), t)).collect();
            let statuses: HashMap<String, AccountStatus> =
                (0..4).map(|u| (format!("u{u}"), AccountStatus::Active)).collect();
            let docs = aggregate_by_account(&records, &statuses).unwrap();
            let distinct: HashSet<&str> = records.iter().map(|r| r.account_id.as_str()).collect();
            prop_assert_eq!(docs.len(), distinct.len());
            for d in &docs {
                let mut expected: Vec<&str> = records
                    .iter()
                    .filter(|r| r.account_id == d.account_id)
                    .flat_map(|r| tokenize(&r.text))
                    .collect();
                let mut got = d.tokens();
                expected.sort_unstable();
                got.sort_unstable();
                prop_assert_eq!(got, expected);
            }
        }
    }
}

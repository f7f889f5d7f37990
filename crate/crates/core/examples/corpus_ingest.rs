//! Reads a posts file and a status file, reports malformed lines, keeps one
//! language and aggregates the posts into labeled account documents.
//!
//! cargo run --example corpus_ingest

use std::collections::HashMap;

use xlingual::corpus::{aggregate_by_account, filter_language, ingest_posts, parse_statuses, split, SplitSpec};

const POSTS: &str = "\
acct_1\ten\tfree followers click here
acct_1\ten\tbest deals on followers
acct_2\ten\tlovely weather today
acct_2\ttl\tmagandang umaga po
acct_3\ten\tgoing for a run
this line has no tabs
acct_4\ten\tnew blog post is up
";

const STATUSES: &str = "\
acct_1\tsuspended
acct_2\tactive
acct_3\tactive
acct_4\tnot_found
";

fn main() -> xlingual::Result<()> {
    let report = ingest_posts(POSTS.as_bytes())?;
    println!("{} lines read, {} malformed", report.lines_read(), report.malformed.len());
    for m in &report.malformed {
        println!("  line {}: {}", m.line_no, m.reason);
    }
    let english = filter_language(report.records, "en");
    let statuses: HashMap<_, _> = parse_statuses(STATUSES.as_bytes())?;
    let docs = aggregate_by_account(&english, &statuses)?;
    for d in &docs {
        println!("{:<8} {:<13} {}", d.account_id, format!("{:?}", d.label), d.text);
    }
    let (train, test) = split(&docs, SplitSpec { train_fraction: 0.5, seed: 1 })?;
    println!("train {} / test {}", train.len(), test.len());
    Ok(())
}

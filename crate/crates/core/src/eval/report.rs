//! `XLREPORT 1` text reports.
//!
//! ````text
//! XLREPORT 1
//!
//! [section]
//! key=value
//! ```csv
//! col,col
//! v,v
//! ```
//! ````
//!
//! Sections are separated by one blank line; a section holds key=value lines
//! followed by at most one fenced CSV block. Keys may not contain `=`; values
//! and CSV cells may not contain newlines (cells also no commas). Floats are
//! written in shortest round-trip form, so parsing and re-serializing is
//! byte-identical.

use std::fmt::Write as _;

use super::metrics::{binary_metrics, ConfusionMatrix, MetricsReport};
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "XLREPORT 1";
const FENCE_OPEN: &str = "```csv";
const FENCE_CLOSE: &str = "```";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvBlock {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvBlock {
    pub fn new(columns: &[&str]) -> Self {
        CsvBlock {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!("CSV row has {} cells, expected {}", row.len(), self.columns.len())));
        }
        if let Some(bad) = row.iter().find(|c| c.contains([',', '\n'])) {
            return Err(Error::invalid(format!("CSV cell {bad:?} contains a comma or newline")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
    pub csv: Option<CsvBlock>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            entries: Vec::new(),
            csv: None,
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::format(format!("section [{}] lacks key {key:?}", self.name)))?;
        raw.parse()
            .map_err(|_| Error::format(format!("section [{}]: bad value {raw:?} for {key:?}", self.name)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    /// Section `name` with metrics and confusion counts.
    pub fn push_metrics(&mut self, name: impl Into<String>, m: &MetricsReport) {
        let mut s = Section::new(name);
        s.set("precision", m.precision)
            .set("recall", m.recall)
            .set("f1", m.f1)
            .set("tp", m.confusion.tp)
            .set("fp", m.confusion.fp)
            .set("fn", m.confusion.fn_)
            .set("tn", m.confusion.tn)
            .set("precision_undefined", m.precision_undefined)
            .set("recall_undefined", m.recall_undefined);
        self.push(s);
    }

    /// Metrics stored by [`Report::push_metrics`]; they must agree exactly
    /// with the embedded confusion counts.
    pub fn metrics(&self, name: &str) -> Result<MetricsReport> {
        let s = self
            .section(name)
            .ok_or_else(|| Error::format(format!("report has no section [{name}]")))?;
        let confusion = ConfusionMatrix {
            tp: s.parse("tp")?,
            fp: s.parse("fp")?,
            fn_: s.parse("fn")?,
            tn: s.parse("tn")?,
        };
        let stored = MetricsReport {
            precision: s.parse("precision")?,
            recall: s.parse("recall")?,
            f1: s.parse("f1")?,
            confusion,
            precision_undefined: s.parse("precision_undefined")?,
            recall_undefined: s.parse("recall_undefined")?,
        };
        if stored != binary_metrics(&confusion) {
            return Err(Error::format(format!("section [{name}]: metrics disagree with confusion counts")));
        }
        Ok(stored)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for s in &self.sections {
            let _ = write!(out, "\n[{}]\n", s.name);
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k}={v}");
            }
            if let Some(csv) = &s.csv {
                out.push_str(FENCE_OPEN);
                out.push('\n');
                out.push_str(&csv.to_csv());
                out.push_str(FENCE_CLOSE);
                out.push('\n');
            }
        }
        out
    }

    /// Strict parser: accepts exactly what [`Report::to_text`] produces.
    pub fn parse(text: &str) -> Result<Self> {
        let body = text
            .strip_prefix(REPORT_HEADER)
            .and_then(|r| r.strip_prefix('\n'))
            .ok_or_else(|| Error::format(format!("report must start with {REPORT_HEADER:?}")))?;
        if body.is_empty() {
            return Ok(Report::new());
        }
        let body = body
            .strip_suffix('\n')
            .ok_or_else(|| Error::format("report must end with a newline"))?;
        let mut lines = body.split('\n').enumerate().peekable();
        let mut report = Report::new();
        let line_err = |n: usize, msg: &str| Error::format(format!("report line {}: {msg}", n + 3));
        while let Some((n, blank)) = lines.next() {
            if !blank.is_empty() {
                return Err(line_err(n, "expected a blank line before the section"));
            }
            let (n, head) = lines.next().ok_or_else(|| line_err(n, "dangling blank line"))?;
            let name = head
                .strip_prefix('[')
                .and_then(|h| h.strip_suffix(']'))
                .ok_or_else(|| line_err(n, "expected [section]"))?;
            let mut section = Section::new(name);
            while let Some(&(n, line)) = lines.peek() {
                if line.is_empty() {
                    break;
                }
                lines.next();
                if line == FENCE_OPEN {
                    let (n, header) = lines.next().ok_or_else(|| line_err(n, "unterminated CSV block"))?;
                    let columns: Vec<&str> = header.split(',').collect();
                    let mut csv = CsvBlock::new(&columns);
                    loop {
                        let (n, row) = lines.next().ok_or_else(|| line_err(n, "unterminated CSV block"))?;
                        if row == FENCE_CLOSE {
                            break;
                        }
                        csv.push(row.split(',').map(String::from).collect())
                            .map_err(|e| line_err(n, &e.to_string()))?;
                    }
                    section.csv = Some(csv);
                    if let Some(&(n, next)) = lines.peek() {
                        if !next.is_empty() {
                            return Err(line_err(n, "nothing may follow a CSV block inside a section"));
                        }
                    }
                    break;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| line_err(n, "expected key=value"))?;
                section.entries.push((k.to_string(), v.to_string()));
            }
            report.push(section);
        }
        let canonical = report.to_text();
        if canonical != text {
            return Err(Error::format("report is not in canonical form"));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new();
        let mut cfg = Section::new("config");
        cfg.set("embedding.dim", 100).set("note", "a=b c");
        r.push(cfg);
        r.push_metrics(
            "metrics.transfer",
            &binary_metrics(&ConfusionMatrix { tp: 7, fp: 3, fn_: 11, tn: 40 }),
        );
        let mut curve = Section::new("curve");
        let mut csv = CsvBlock::new(&["fraction", "kind", "seed", "precision", "recall", "f1"]);
        csv.push(vec!["0.1".into(), "transfer".into(), "0".into(), "0.5".into(), "0.25".into(), "0.3333333333333333".into()])
            .unwrap();
        curve.csv = Some(csv);
        r.push(curve);
        r.push(Section::new("empty"));
        r
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = sample().to_text();
        let parsed = Report::parse(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(parsed.to_text(), text);
        assert!(text.starts_with("XLREPORT 1\n\n[config]\nembedding.dim=100\n"));
    }

    #[test]
    fn metrics_recomputed_from_counts() {
        let r = Report::parse(&sample().to_text()).unwrap();
        let m = r.metrics("metrics.transfer").unwrap();
        assert_eq!(m, binary_metrics(&m.confusion));
        let tampered = sample().to_text().replace("tp=7", "tp=8");
        assert!(Report::parse(&tampered).unwrap().metrics("metrics.transfer").is_err());
    }

    #[test]
    fn rejects_non_canonical() {
        assert!(Report::parse("XLREPORT 2\n").is_err());
        assert!(Report::parse("XLREPORT 1\n[a]\n").is_err());
        assert!(Report::parse("XLREPORT 1\n\n[a]\nnovalue\n").is_err());
        assert!(Report::parse("XLREPORT 1\n\n[a]\n```csv\nx\n").is_err());
        assert!(Report::parse("XLREPORT 1\n\n[a]\nk=v").is_err());
        assert_eq!(Report::parse("XLREPORT 1\n").unwrap(), Report::new());
    }
}

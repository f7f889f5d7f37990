//! Word → vector tables and their text format.
//!
//! The format is the common word2vec text layout: a `<count> <dim>` header,
//! then one `word v1 … vd` line per word. Values are written with shortest
//! round-trip formatting so a save/load cycle is bit-exact.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors {
            words: Vec::new(),
            index: HashMap::new(),
            dim,
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        let word = word.into();
        if self.index.contains_key(&word) {
            return Err(Error::format(format!("duplicate word {word:?}")));
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn from_rows(words: Vec<String>, rows: Matrix<f64>) -> Result<Self> {
        if words.len() != rows.rows() {
            return Err(Error::invalid(format!(
                "{} words but {} vector rows",
                words.len(),
                rows.rows()
            )));
        }
        let mut out = WordVectors::new(rows.cols());
        for (i, w) in words.into_iter().enumerate() {
            out.push(w, rows.row(i))?;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.id(word).map(|i| self.vector(i))
    }

    /// The vectors as a `len × dim` matrix, in table order.
    pub fn to_matrix(&self) -> Matrix<f64> {
        Matrix::from_vec(self.len(), self.dim, self.data.clone())
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for (i, word) in self.words.iter().enumerate() {
            line.clear();
            line.push_str(word);
            for x in self.vector(i) {
                use std::fmt::Write as _;
                write!(line, " {x}").expect("writing to a String cannot fail");
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("vector file is empty"))??;
        let mut fields = header.split_whitespace();
        let (Some(count), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::format(format!("bad vector header {header:?}")));
        };
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(format!("bad vector header field {s:?}")))
        };
        let (count, dim) = (parse_usize(count)?, parse_usize(dim)?);
        let mut out = WordVectors::new(dim);
        let mut values = Vec::with_capacity(dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i + 2;
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            values.clear();
            for f in fields {
                values.push(f.parse::<f64>().map_err(|_| {
                    Error::format(format!("line {line_no}: non-numeric value {f:?}"))
                })?);
            }
            if values.len() != dim {
                return Err(Error::format(format!(
                    "line {line_no}: expected {dim} values, found {}",
                    values.len()
                )));
            }
            out.push(word, &values)
                .map_err(|e| e.context(format!("line {line_no}")))?;
        }
        if out.len() != count {
            return Err(Error::format(format!(
                "header declares {count} words, found {}",
                out.len()
            )));
        }
        Ok(out)
    }

    /// Loads and checks the dimension against what the caller expects.
    pub fn load_with_dim<R: BufRead>(r: R, expected_dim: usize) -> Result<Self> {
        let v = Self::load(r)?;
        if v.dim != expected_dim {
            return Err(Error::DimensionMismatch {
                expected: expected_dim,
                found: v.dim,
            });
        }
        Ok(v)
    }
}

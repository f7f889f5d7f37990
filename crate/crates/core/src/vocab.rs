//! Word vocabularies and hashed character n-gram (subword) indexing.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Frequency-thresholded word list. Ids are assigned by descending count,
/// ties broken lexicographically, so the same corpus always yields the same
/// ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<(String, u64)>,
    word_to_id: HashMap<String, usize>,
    min_count: u64,
    total_tokens: u64,
}

impl Vocabulary {
    pub fn build<D, T, S>(corpus: D, min_count: u64) -> Result<Self>
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut total_tokens = 0u64;
        for doc in corpus {
            for tok in doc {
                total_tokens += 1;
                let tok = tok.as_ref();
                match counts.get_mut(tok) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(tok.to_owned(), 1);
                    }
                }
            }
        }
        if total_tokens == 0 {
            return Err(Error::invalid("cannot build a vocabulary from an empty corpus"));
        }
        let words: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        Self::from_counts(words, min_count, total_tokens)
    }

    /// Assembles a vocabulary from explicit counts, applying the canonical
    /// ordering. Used when reading dumps and checkpoints.
    pub fn from_counts(mut words: Vec<(String, u64)>, min_count: u64, total_tokens: u64) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        words.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut word_to_id = HashMap::with_capacity(words.len());
        for (i, (w, c)) in words.iter().enumerate() {
            if *c < min_count {
                return Err(Error::format(format!("word {w:?} has count {c} below min_count {min_count}")));
            }
            if word_to_id.insert(w.clone(), i).is_some() {
                return Err(Error::format(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Vocabulary {
            words,
            word_to_id,
            min_count,
            total_tokens,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id].0
    }

    pub fn count(&self, id: usize) -> u64 {
        self.words[id].1
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Corpus token count, including tokens below the threshold.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(|(w, c)| (w.as_str(), *c))
    }

    pub fn write_dump<W: Write>(&self, w: W) -> Result<()> {
        write_count_table(
            w,
            &format!("VOCAB v1 {} {} {}", self.len(), self.min_count, self.total_tokens),
            self.iter(),
        )
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let (header, words) = read_count_table(r, "VOCAB v1")?;
        let [size, min_count, total] = header[..] else {
            return Err(Error::format("VOCAB header needs size, min_count and total_tokens"));
        };
        if size as usize != words.len() {
            return Err(Error::format(format!("VOCAB header declares {size} words, found {}", words.len())));
        }
        let vocab = Self::from_counts(words.clone(), min_count, total)?;
        if vocab.words != words {
            return Err(Error::format("VOCAB entries are not in canonical id order"));
        }
        Ok(vocab)
    }
}

/// Writes `header` followed by one `item \t count` line per entry.
pub(crate) fn write_count_table<'a, W: Write>(
    mut w: W,
    header: &str,
    items: impl Iterator<Item = (&'a str, u64)>,
) -> Result<()> {
    writeln!(w, "{header}")?;
    for (item, count) in items {
        writeln!(w, "{item}\t{count}")?;
    }
    Ok(())
}

/// Reads a table written by [`write_count_table`]; returns the numeric header
/// fields following `tag` and the entries.
pub(crate) fn read_count_table<R: BufRead>(r: R, tag: &str) -> Result<(Vec<u64>, Vec<(String, u64)>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::format("missing header line"))??;
    let rest = header
        .strip_prefix(tag)
        .ok_or_else(|| Error::format(format!("expected header starting with {tag:?}, got {header:?}")))?;
    let fields = rest
        .split_whitespace()
        .map(|f| f.parse::<u64>().map_err(|_| Error::format(format!("bad header field {f:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let (item, count) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::format(format!("line {}: expected item TAB count", i + 2)))?;
        let count = count
            .parse::<u64>()
            .map_err(|_| Error::format(format!("line {}: bad count {count:?}", i + 2)))?;
        entries.push((item.to_owned(), count));
    }
    Ok((fields, entries))
}

const FNV_OFFSET_BASIS: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;

/// 32-bit FNV-1a over raw bytes.
pub fn fnv1a_32(bytes: &[u8]) -> u32 {
    bytes
        .iter()
        .fold(FNV_OFFSET_BASIS, |h, &b| (h ^ u32::from(b)).wrapping_mul(FNV_PRIME))
}

/// Bucket of an n-gram in a table of `buckets` rows.
#[inline]
pub fn hash_subword(ngram: &str, buckets: u32) -> u32 {
    fnv1a_32(ngram.as_bytes()) % buckets
}

/// Character n-gram extraction over boundary-marked words (`<word>`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubwordIndex {
    n_min: usize,
    n_max: usize,
    buckets: u32,
}

impl Default for SubwordIndex {
    fn default() -> Self {
        SubwordIndex {
            n_min: 3,
            n_max: 6,
            buckets: 2_000_000,
        }
    }
}

impl SubwordIndex {
    pub fn new(n_min: usize, n_max: usize, buckets: u32) -> Result<Self> {
        if n_min < 1 || n_min > n_max {
            return Err(Error::invalid(format!("need 1 <= n_min <= n_max, got {n_min}..{n_max}")));
        }
        if buckets < 1 {
            return Err(Error::invalid("bucket count must be at least 1"));
        }
        Ok(SubwordIndex { n_min, n_max, buckets })
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn buckets(&self) -> u32 {
        self.buckets
    }

    /// All contiguous character n-grams with `n_min <= n <= n_max` of
    /// `<word>`, ordered by length then position. The reserved `<` and `>`
    /// are replaced by `_` inside the word.
    pub fn subwords(&self, word: &str) -> Vec<String> {
        let mut wrapped: Vec<char> = Vec::with_capacity(word.len() + 2);
        wrapped.push('<');
        wrapped.extend(word.chars().map(|c| if c == '<' || c == '>' { '_' } else { c }));
        wrapped.push('>');
        let len = wrapped.len();
        let mut out = Vec::new();
        for n in self.n_min..=self.n_max.min(len) {
            for start in 0..=len - n {
                out.push(wrapped[start..start + n].iter().collect());
            }
        }
        out
    }

    pub fn bucket(&self, ngram: &str) -> u32 {
        hash_subword(ngram, self.buckets)
    }

    /// Input-table rows for `word`: its vocabulary row (if any) followed by
    /// one bucket row, offset by `|V|`, per n-gram. Colliding n-grams repeat.
    pub fn input_ids(&self, word: &str, vocab: &Vocabulary) -> Vec<usize> {
        let grams = self.subwords(word);
        let mut ids = Vec::with_capacity(grams.len() + 1);
        if let Some(id) = vocab.id(word) {
            ids.push(id);
        }
        let offset = vocab.len();
        ids.extend(grams.iter().map(|g| offset + self.bucket(g) as usize));
        ids
    }

    /// Row count of an input table for `vocab`.
    pub fn input_rows(&self, vocab: &Vocabulary) -> usize {
        vocab.len() + self.buckets as usize
    }
}

//! Synthetic twin-language corpora with a planted class signal.
//!
//! Both languages share one word-level process: Zipf unigram frequencies
//! plus a per-word successor list (so every word has its own context
//! profile), and "signal phrases" of consecutive signal words that start
//! `signal_lift` times more often in positive documents. Signal words occur
//! nowhere else. The target language
//! renames every word through a random bijection and samples its documents
//! independently.

use std::collections::{HashMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::{BilingualDictionary, DictionaryRole};
use crate::corpus::{AccountDocument, AccountStatus, Label, PostRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    /// Successor-list length per word.
    pub successors: usize,
    /// Probability that the next token comes from the previous token's
    /// successor list rather than the unigram distribution.
    pub coupling: f64,
    pub signal_words: usize,
    /// Signal words are drawn from frequency ranks at or after this one.
    pub signal_min_rank: usize,
    /// Per-token probability of starting a signal phrase in a negative document.
    pub signal_rate: f64,
    /// Multiplier on `signal_rate` for positive documents.
    pub signal_lift: f64,
    pub phrase_len: usize,
    pub positive_rate: f64,
    pub label_noise: f64,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub source_docs: usize,
    pub target_docs: usize,
    pub posts_per_account: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocab_size: 2000,
            zipf_exponent: 0.5,
            successors: 8,
            coupling: 0.98,
            signal_words: 400,
            signal_min_rank: 50,
            signal_rate: 0.0006,
            signal_lift: 100.0,
            phrase_len: 6,
            positive_rate: 0.3,
            label_noise: 0.0,
            doc_len_min: 40,
            doc_len_max: 80,
            source_docs: 8000,
            target_docs: 800,
            posts_per_account: 4,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.vocab_size < 2 {
            errs.push("vocab_size must be >= 2".to_string());
        }
        if self.signal_min_rank + self.signal_words >= self.vocab_size {
            errs.push(format!(
                "{} signal words from rank {} do not fit in a vocabulary of {}",
                self.signal_words, self.signal_min_rank, self.vocab_size
            ));
        }
        if self.successors == 0 {
            errs.push("successors must be >= 1".into());
        }
        for (name, v) in [("coupling", self.coupling), ("positive_rate", self.positive_rate), ("label_noise", self.label_noise)] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.signal_lift >= 0.0) || !(0.0..=1.0).contains(&(self.signal_rate * self.signal_lift.max(1.0))) {
            errs.push(format!(
                "signal_rate {} with lift {} is not a probability",
                self.signal_rate, self.signal_lift
            ));
        }
        if self.signal_words == 0 && self.signal_rate > 0.0 {
            errs.push("signal_rate > 0 needs at least one signal word".into());
        }
        if self.phrase_len == 0 {
            errs.push("phrase_len must be >= 1".into());
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            errs.push(format!("invalid document length range {}..{}", self.doc_len_min, self.doc_len_max));
        }
        if self.posts_per_account == 0 {
            errs.push("posts_per_account must be >= 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBilingual {
    pub source: Vec<AccountDocument>,
    pub target: Vec<AccountDocument>,
    /// `(source word, target word)` for every word, source rank order.
    pub dictionary: Vec<(String, String)>,
    /// Source-language names of the signal words.
    pub signal_words: Vec<String>,
}

impl SyntheticBilingual {
    pub fn source_to_target(&self) -> HashMap<&str, &str> {
        self.dictionary.iter().map(|(s, t)| (s.as_str(), t.as_str())).collect()
    }

    pub fn target_to_source(&self) -> HashMap<&str, &str> {
        self.dictionary.iter().map(|(s, t)| (t.as_str(), s.as_str())).collect()
    }
}

impl SyntheticBilingual {
    /// Disjoint random train and evaluation dictionaries drawn from the
    /// ground truth.
    pub fn split_dictionary(&self, n_train: usize, n_eval: usize, seed: u64) -> Result<(BilingualDictionary, BilingualDictionary)> {
        if n_train + n_eval > self.dictionary.len() {
            return Err(Error::invalid(format!(
                "cannot draw {n_train} + {n_eval} pairs from a dictionary of {}",
                self.dictionary.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.dictionary.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let pick = |ids: &[usize], role| BilingualDictionary::new(ids.iter().map(|&i| self.dictionary[i].clone()).collect(), role);
        Ok((
            pick(&order[..n_train], DictionaryRole::Train),
            pick(&order[n_train..n_train + n_eval], DictionaryRole::Eval),
        ))
    }
}

/// Replaces every token through `map`; unknown tokens are an error.
pub fn rename(tokens: &[&str], map: &HashMap<&str, &str>) -> Result<Vec<String>> {
    tokens
        .iter()
        .map(|t| {
            map.get(t)
                .map(|s| s.to_string())
                .ok_or_else(|| Error::invalid(format!("token {t:?} has no translation")))
        })
        .collect()
}

struct Process {
    unigram: WeightedIndex<f64>,
    successors: Vec<Vec<usize>>,
    signal: Vec<usize>,
}

impl Process {
    fn new(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let weights: Vec<f64> = (0..config.vocab_size)
            .map(|r| 1.0 / ((r + 1) as f64).powf(config.zipf_exponent))
            .collect();
        let mut pool: Vec<usize> = (config.signal_min_rank..config.vocab_size).collect();
        pool.shuffle(rng);
        let mut signal: Vec<usize> = pool.into_iter().take(config.signal_words).collect();
        signal.sort_unstable();
        // signal words occur only inside signal phrases
        let mut weights = weights;
        for &w in &signal {
            weights[w] = 0.0;
        }
        let unigram = WeightedIndex::new(&weights).map_err(|e| Error::invalid(format!("zipf weights: {e}")))?;
        let successors = (0..config.vocab_size)
            .map(|_| (0..config.successors).map(|_| unigram.sample(rng)).collect())
            .collect();
        Ok(Process {
            unigram,
            successors,
            signal,
        })
    }

    fn document(&self, config: &SynthConfig, positive: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let len = rng.random_range(config.doc_len_min..=config.doc_len_max);
        let rate = if positive {
            config.signal_rate * config.signal_lift
        } else {
            config.signal_rate
        };
        let mut doc = Vec::with_capacity(len + config.phrase_len);
        let mut prev = self.unigram.sample(rng);
        while doc.len() < len {
            if !self.signal.is_empty() && rng.random_bool(rate) {
                for _ in 0..config.phrase_len {
                    prev = *self.signal.choose(rng).expect("non-empty signal set");
                    doc.push(prev);
                }
                continue;
            }
            prev = if rng.random_bool(config.coupling) {
                *self.successors[prev].choose(rng).expect("successor lists are non-empty")
            } else {
                self.unigram.sample(rng)
            };
            doc.push(prev);
        }
        doc.truncate(len);
        doc
    }

    fn corpus(&self, config: &SynthConfig, n: usize, names: &[String], prefix: &str, rng: &mut ChaCha8Rng) -> Vec<AccountDocument> {
        (0..n)
            .map(|i| {
                let positive = rng.random_bool(config.positive_rate);
                let ids = self.document(config, positive, rng);
                let noisy = if rng.random_bool(config.label_noise) { !positive } else { positive };
                let text = ids.iter().map(|&w| names[w].as_str()).collect::<Vec<_>>().join(" ");
                AccountDocument {
                    account_id: format!("{prefix}{i:06}"),
                    text,
                    label: Label::from(noisy),
                }
            })
            .collect()
    }
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";

fn letter_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(4..=8);
    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

fn syllable_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=4);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).unwrap() as char);
        w.push(*VOWELS.choose(rng).unwrap() as char);
    }
    w
}

fn unique_names(n: usize, rng: &mut ChaCha8Rng, make: fn(&mut ChaCha8Rng) -> String) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = make(rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Deterministic in `(config, seed)`.
pub fn generate_synthetic_bilingual(config: &SynthConfig, seed: u64) -> Result<SyntheticBilingual> {
    config.validate()?;
    let mut structure = ChaCha8Rng::seed_from_u64(seed);
    let process = Process::new(config, &mut structure)?;
    let source_names = unique_names(config.vocab_size, &mut structure, letter_word);
    let target_names = unique_names(config.vocab_size, &mut structure, syllable_word);

    let mut source_rng = ChaCha8Rng::seed_from_u64(seed);
    source_rng.set_stream(1);
    let mut target_rng = ChaCha8Rng::seed_from_u64(seed);
    target_rng.set_stream(2);
    let source = process.corpus(config, config.source_docs, &source_names, "src", &mut source_rng);
    let target = process.corpus(config, config.target_docs, &target_names, "tgt", &mut target_rng);

    let signal_words = process.signal.iter().map(|&w| source_names[w].clone()).collect();
    let dictionary = source_names.into_iter().zip(target_names).collect();
    Ok(SyntheticBilingual {
        source,
        target,
        dictionary,
        signal_words,
    })
}

/// Splits each document into up to `posts_per_account` posts tagged `lang`
/// and assigns statuses: positives are suspended, negatives draw uniformly
/// from the other three statuses.
pub fn to_posts(docs: &[AccountDocument], lang: &str, posts_per_account: usize, seed: u64) -> (Vec<PostRecord>, Vec<(String, AccountStatus)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let negatives = [AccountStatus::Active, AccountStatus::NotFound, AccountStatus::Protected];
    let mut posts = Vec::new();
    let mut statuses = Vec::with_capacity(docs.len());
    for doc in docs {
        let tokens = doc.tokens();
        let per_post = tokens.len().div_ceil(posts_per_account.max(1)).max(1);
        for chunk in tokens.chunks(per_post) {
            posts.push(PostRecord {
                account_id: doc.account_id.clone(),
                language_tag: lang.to_string(),
                text: chunk.join(" "),
            });
        }
        let status = if doc.label.is_positive() {
            AccountStatus::Suspended
        } else {
            *negatives.choose(&mut rng).unwrap()
        };
        statuses.push((doc.account_id.clone(), status));
    }
    (posts, statuses)
}

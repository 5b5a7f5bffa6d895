//! Level-2 preprocessing: joining adjacent tokens into `_`-delimited phrases.
//!
//! Two joiners exist. A trained [`PhraseModel`] scores each adjacent pair
//! `(a, b)` as
//!
//! ```text
//! score(a, b) = (count(a b) - discount) * N / (count(a) * count(b))
//! ```
//!
//! where `N` is the number of tokens counted, and joins the pair when the score
//! reaches the threshold. [`apply_phrases_vocab`] needs no statistics: it joins
//! the longest window whose joined form is in a WEC's vocabulary.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DELIMITER: &str = "_";
pub const DEFAULT_THRESHOLD: f64 = 10.0;
pub const DEFAULT_MAX_LEN: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum PhraseError {
    #[error("cannot train a phrase model on an empty corpus")]
    EmptyCorpus,
    #[error("invalid phrase parameters: {0}")]
    InvalidParams(&'static str),
    #[error("phrase model line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Membership test used by the vocabulary-driven joiner.
pub trait Vocabulary {
    fn contains_word(&self, word: &str) -> bool;
}

impl Vocabulary for HashSet<String> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

impl Vocabulary for HashSet<&str> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

impl Vocabulary for std::collections::BTreeSet<String> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

impl Vocabulary for crate::store::WecStore {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhraseParams {
    pub discount: f64,
    pub threshold: f64,
    pub passes: usize,
}

impl Default for PhraseParams {
    fn default() -> Self {
        Self {
            discount: 0.0,
            threshold: DEFAULT_THRESHOLD,
            passes: 1,
        }
    }
}

/// Counts gathered in one training pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseLayer {
    pub unigrams: BTreeMap<String, u64>,
    pub bigrams: BTreeMap<String, BTreeMap<String, u64>>,
    pub token_count: u64,
}

impl PhraseLayer {
    fn count(corpus: &[Vec<String>]) -> Self {
        let mut layer = PhraseLayer::default();
        for sentence in corpus {
            for t in sentence {
                *layer.unigrams.entry(t.clone()).or_default() += 1;
                layer.token_count += 1;
            }
            for w in sentence.windows(2) {
                *layer
                    .bigrams
                    .entry(w[0].clone())
                    .or_default()
                    .entry(w[1].clone())
                    .or_default() += 1;
            }
        }
        layer
    }

    pub fn unigram(&self, w: &str) -> u64 {
        self.unigrams.get(w).copied().unwrap_or(0)
    }

    pub fn bigram(&self, a: &str, b: &str) -> u64 {
        self.bigrams
            .get(a)
            .and_then(|m| m.get(b))
            .copied()
            .unwrap_or(0)
    }

    /// `None` when the pair was never seen.
    pub fn score(&self, a: &str, b: &str, discount: f64) -> Option<f64> {
        let ab = self.bigram(a, b);
        if ab == 0 {
            return None;
        }
        let (ca, cb) = (self.unigram(a) as f64, self.unigram(b) as f64);
        Some((ab as f64 - discount) * self.token_count as f64 / (ca * cb))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseModel {
    pub layers: Vec<PhraseLayer>,
    pub discount: f64,
    pub threshold: f64,
    pub delimiter: String,
}

impl PhraseModel {
    pub fn passes(&self) -> usize {
        self.layers.len()
    }

    fn join_pass(&self, layer: &PhraseLayer, tokens: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len() {
                let (a, b) = (&tokens[i], &tokens[i + 1]);
                if layer
                    .score(a, b, self.discount)
                    .is_some_and(|s| s >= self.threshold)
                {
                    out.push(format!("{a}{}{b}", self.delimiter));
                    i += 2;
                    continue;
                }
            }
            out.push(tokens[i].clone());
            i += 1;
        }
        out
    }

    /// Stable text serialization (tab-separated, one count per line).
    pub fn to_text(&self) -> String {
        let mut s = String::from("wecstore-phrases v1\n");
        let _ = writeln!(s, "discount\t{}", self.discount);
        let _ = writeln!(s, "threshold\t{}", self.threshold);
        let _ = writeln!(s, "delimiter\t{}", self.delimiter);
        for layer in &self.layers {
            let _ = writeln!(s, "layer\t{}", layer.token_count);
            for (w, c) in &layer.unigrams {
                let _ = writeln!(s, "u\t{w}\t{c}");
            }
            for (a, m) in &layer.bigrams {
                for (b, c) in m {
                    let _ = writeln!(s, "b\t{a}\t{b}\t{c}");
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, PhraseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, reason: &str| PhraseError::Parse {
            line,
            reason: reason.to_string(),
        };
        match lines.next() {
            Some((_, "wecstore-phrases v1")) => {}
            _ => return Err(err(1, "missing header")),
        }
        let mut field = |name: &str| -> Result<String, PhraseError> {
            let (n, l) = lines.next().ok_or_else(|| err(0, "truncated"))?;
            l.strip_prefix(name)
                .and_then(|r| r.strip_prefix('\t'))
                .map(str::to_string)
                .ok_or_else(|| err(n, &format!("expected `{name}`")))
        };
        let discount = field("discount")?
            .parse()
            .map_err(|_| err(2, "bad discount"))?;
        let threshold = field("threshold")?
            .parse()
            .map_err(|_| err(3, "bad threshold"))?;
        let delimiter = field("delimiter")?;
        let mut layers: Vec<PhraseLayer> = Vec::new();
        for (n, line) in lines {
            let parts: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<u64>().map_err(|_| err(n, "bad count"));
            match parts.as_slice() {
                ["layer", total] => layers.push(PhraseLayer {
                    token_count: num(total)?,
                    ..Default::default()
                }),
                ["u", w, c] => {
                    let layer = layers
                        .last_mut()
                        .ok_or_else(|| err(n, "count before layer"))?;
                    layer.unigrams.insert(w.to_string(), num(c)?);
                }
                ["b", a, b, c] => {
                    let layer = layers
                        .last_mut()
                        .ok_or_else(|| err(n, "count before layer"))?;
                    layer
                        .bigrams
                        .entry(a.to_string())
                        .or_default()
                        .insert(b.to_string(), num(c)?);
                }
                [""] => {}
                _ => return Err(err(n, "unrecognized line")),
            }
        }
        if layers.is_empty() {
            return Err(err(0, "no layers"));
        }
        Ok(Self {
            layers,
            discount,
            threshold,
            delimiter,
        })
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Trains a model; with `passes > 1` each pass counts the corpus as rewritten
/// by the previous pass, so phrases of up to `passes + 1` tokens can form.
pub fn train_phrase_model(
    corpus: &[Vec<String>],
    params: PhraseParams,
) -> Result<PhraseModel, PhraseError> {
    if corpus.iter().all(Vec::is_empty) {
        return Err(PhraseError::EmptyCorpus);
    }
    if params.passes == 0 {
        return Err(PhraseError::InvalidParams("passes must be at least 1"));
    }
    let non_negative = |x: f64| x >= 0.0;
    if !non_negative(params.discount) || !non_negative(params.threshold) {
        return Err(PhraseError::InvalidParams(
            "discount and threshold must be non-negative",
        ));
    }
    let mut model = PhraseModel {
        layers: Vec::with_capacity(params.passes),
        discount: params.discount,
        threshold: params.threshold,
        delimiter: DELIMITER.to_string(),
    };
    let mut current: Vec<Vec<String>> = corpus.to_vec();
    for pass in 0..params.passes {
        let layer = PhraseLayer::count(&current);
        if pass + 1 < params.passes {
            current = current.iter().map(|s| model.join_pass(&layer, s)).collect();
        }
        model.layers.push(layer);
    }
    Ok(model)
}

/// Left-to-right scan per pass; a joined pair is never rejoined in the same pass.
pub fn apply_phrases_model(model: &PhraseModel, tokens: &[String]) -> Vec<String> {
    let mut current = tokens.to_vec();
    for layer in &model.layers {
        current = model.join_pass(layer, &current);
    }
    current
}

/// Greedy longest match against a vocabulary, windows of at most `max_len`.
pub fn apply_phrases_vocab<V: Vocabulary + ?Sized>(
    vocab: &V,
    tokens: &[String],
    max_len: usize,
) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    'scan: while i < tokens.len() {
        let longest = max_len.min(tokens.len() - i);
        for len in (2..=longest).rev() {
            let joined = tokens[i..i + len].join(DELIMITER);
            if vocab.contains_word(&joined) {
                out.push(joined);
                i += len;
                continue 'scan;
            }
        }
        out.push(tokens[i].clone());
        i += 1;
    }
    out
}

//! Shared text primitives.
//!
//! Cleaning and tokenization, suffix-stripping stemming, stop-word removal,
//! sparse term-frequency vectors with L2 normalization, cosine similarity,
//! and Levenshtein edit distance. Everything here is a pure function of its
//! inputs and safe under arbitrary parallelism.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Default English stop words, one per line. Override with
/// [`TextConfig::stopwords_from_file`].
pub const STOPWORDS_EN: &str = include_str!("stopwords_en.txt");
/// Default Dutch stop words.
pub const STOPWORDS_NL: &str = include_str!("stopwords_nl.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("unknown stemmer key '{0}' (expected 'none' or a snowball language)")]
    UnknownStemmer(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Tokenization configuration. The corpus language is not fixed by the
/// method, so every language-dependent resource is selected here.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TextConfig {
    /// Stemmer key: `none` or a snowball language (`english`, `dutch`, ...).
    pub stemmer: String,
    /// Surface forms removed before stemming.
    pub stopwords: BTreeSet<String>,
    /// Tokens shorter than this are dropped.
    pub min_token_chars: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            stemmer: "english".to_string(),
            stopwords: parse_stopwords(STOPWORDS_EN),
            min_token_chars: 2,
        }
    }
}

impl TextConfig {
    pub fn with_stemmer(mut self, key: &str) -> Self {
        self.stemmer = key.to_string();
        self
    }

    /// Load a stop-word list (UTF-8, one token per line) replacing the
    /// current one.
    pub fn stopwords_from_file(mut self, path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.stopwords = parse_stopwords(&text);
        Ok(self)
    }
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// A cleaned, tokenized document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDoc {
    pub email_id: String,
    pub tokens: Vec<String>,
}

/// Tokenizer built from a [`TextConfig`]. Construction validates the
/// stemmer key; tokenization itself cannot fail.
pub struct Tokenizer {
    cfg: TextConfig,
    stemmer: Option<rust_stemmers::Stemmer>,
    url_re: Regex,
    email_re: Regex,
}

impl fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tokenizer").field("cfg", &self.cfg).finish()
    }
}

fn stemmer_for_key(key: &str) -> Result<Option<rust_stemmers::Stemmer>, TextError> {
    use rust_stemmers::{Algorithm, Stemmer};
    let algo = match key {
        "none" => return Ok(None),
        "arabic" => Algorithm::Arabic,
        "danish" => Algorithm::Danish,
        "dutch" => Algorithm::Dutch,
        "english" => Algorithm::English,
        "finnish" => Algorithm::Finnish,
        "french" => Algorithm::French,
        "german" => Algorithm::German,
        "greek" => Algorithm::Greek,
        "hungarian" => Algorithm::Hungarian,
        "italian" => Algorithm::Italian,
        "norwegian" => Algorithm::Norwegian,
        "portuguese" => Algorithm::Portuguese,
        "romanian" => Algorithm::Romanian,
        "russian" => Algorithm::Russian,
        "spanish" => Algorithm::Spanish,
        "swedish" => Algorithm::Swedish,
        "tamil" => Algorithm::Tamil,
        "turkish" => Algorithm::Turkish,
        other => return Err(TextError::UnknownStemmer(other.to_string())),
    };
    Ok(Some(Stemmer::create(algo)))
}

impl Tokenizer {
    pub fn new(cfg: TextConfig) -> Result<Self, TextError> {
        let stemmer = stemmer_for_key(&cfg.stemmer)?;
        Ok(Tokenizer {
            cfg,
            stemmer,
            // Unanchored, conservative: anything URL-shaped up to whitespace
            // or a closing delimiter.
            url_re: Regex::new(r#"(?i)\b(?:https?://|www\.)[^\s<>"')\]]+"#).unwrap(),
            email_re: Regex::new(r"[^\s<>@]+@[^\s<>@]+").unwrap(),
        })
    }

    pub fn config(&self) -> &TextConfig {
        &self.cfg
    }

    /// Clean `body` and produce the stemmed token list.
    ///
    /// Order of operations: NFC normalization, URL and email-address
    /// removal, line-break flattening, non-letter stripping, lowercasing,
    /// stop-word removal, stemming. Empty output is allowed.
    pub fn clean_and_tokenize(&self, email_id: &str, body: &str) -> TokenDoc {
        let nfc: String = body.nfc().collect();
        let no_urls = self.url_re.replace_all(&nfc, " ");
        let no_emails = self.email_re.replace_all(&no_urls, " ");

        let mut cleaned = String::with_capacity(no_emails.len());
        for ch in no_emails.chars() {
            if ch.is_alphabetic() {
                for lc in ch.to_lowercase() {
                    cleaned.push(lc);
                }
            } else {
                cleaned.push(' ');
            }
        }

        let tokens = cleaned
            .split_whitespace()
            .filter(|tok| tok.chars().count() >= self.cfg.min_token_chars)
            .filter(|tok| !self.cfg.stopwords.contains(*tok))
            .map(|tok| match &self.stemmer {
                Some(stemmer) => stemmer.stem(tok).into_owned(),
                None => tok.to_string(),
            })
            .collect();

        TokenDoc {
            email_id: email_id.to_string(),
            tokens,
        }
    }
}

/// Ordered corpus vocabulary mapping tokens to dense ids.
///
/// Built in a separate pass before vectorization so that permuting the
/// input corpus cannot change token ids (tokens are sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn build<'a, I: IntoIterator<Item = &'a TokenDoc>>(docs: I) -> Self {
        let uniq: BTreeSet<&str> = docs
            .into_iter()
            .flat_map(|d| d.tokens.iter().map(String::as_str))
            .collect();
        Self::from_tokens(uniq.into_iter().map(str::to_string).collect())
    }

    /// Rebuild from an ordered token list (e.g. a stored model artifact).
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Sparse term-frequency vector; `weights` sorted by token id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfVector {
    pub email_id: String,
    pub weights: Vec<(u32, f64)>,
}

impl TfVector {
    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Bag-of-words vector for `doc`. Raw counts, or unit-L2 weights when
/// `normalize` is set; an empty document stays the zero vector.
pub fn tf_vector(doc: &TokenDoc, vocab: &Vocabulary, normalize: bool) -> TfVector {
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for tok in &doc.tokens {
        if let Some(id) = vocab.id(tok) {
            *counts.entry(id).or_insert(0.0) += 1.0;
        }
    }
    let mut weights: Vec<(u32, f64)> = counts.into_iter().collect();
    weights.sort_unstable_by_key(|(id, _)| *id);
    if normalize {
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in weights.iter_mut() {
                *w /= norm;
            }
        }
    }
    TfVector {
        email_id: doc.email_id.clone(),
        weights,
    }
}

/// Cosine similarity in [0, 1]. Zero vectors (and disjoint supports)
/// compare as 0 so downstream thresholding stays total.
pub fn cosine(a: &TfVector, b: &TfVector) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    let (mut i, mut j) = (0, 0);
    while i < a.weights.len() && j < b.weights.len() {
        let (ia, wa) = a.weights[i];
        let (ib, wb) = b.weights[j];
        match ia.cmp(&ib) {
            std::cmp::Ordering::Less => {
                na += wa * wa;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                nb += wb * wb;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                dot += wa * wb;
                na += wa * wa;
                nb += wb * wb;
                i += 1;
                j += 1;
            }
        }
    }
    for (_, wa) in &a.weights[i..] {
        na += wa * wa;
    }
    for (_, wb) in &b.weights[j..] {
        nb += wb * wb;
    }
    if na == 0.0 || nb == 0.0 || dot == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

/// Levenshtein distance: minimum number of single-character insertions,
/// deletions, and substitutions (unit cost each).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

/// Two-row DP over already-decoded char slices. Exposed for callers that
/// compare one string against many. Short inputs (the common case for
/// domain names) run on stack buffers.
pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    const STACK: usize = 32;
    if b.len() < STACK {
        let mut prev = [0usize; STACK];
        let mut cur = [0usize; STACK];
        levenshtein_rows(a, b, &mut prev, &mut cur)
    } else {
        let mut prev = vec![0usize; b.len() + 1];
        let mut cur = vec![0usize; b.len() + 1];
        levenshtein_rows(a, b, &mut prev, &mut cur)
    }
}

fn levenshtein_rows(a: &[char], b: &[char], prev: &mut [usize], cur: &mut [usize]) -> usize {
    let mut prev: &mut [usize] = prev;
    let mut cur: &mut [usize] = cur;
    for (j, slot) in prev.iter_mut().enumerate().take(b.len() + 1) {
        *slot = j;
    }
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
pub mod oracle {
    //! Definition-shaped Levenshtein oracle used by tests: top-down
    //! recursion on the first characters, memoized, independent of the
    //! two-row implementation above.

    pub fn levenshtein_recursive(a: &[u8], b: &[u8]) -> usize {
        let mut memo = vec![usize::MAX; (a.len() + 1) * (b.len() + 1)];
        rec(a, b, 0, 0, &mut memo, b.len() + 1)
    }

    fn rec(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [usize], stride: usize) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        let key = i * stride + j;
        if memo[key] != usize::MAX {
            return memo[key];
        }
        let same = a[i] == b[j];
        let mut best = rec(a, b, i + 1, j + 1, memo, stride) + usize::from(!same);
        if !same {
            best = best
                .min(rec(a, b, i + 1, j, memo, stride) + 1)
                .min(rec(a, b, i, j + 1, memo, stride) + 1);
        }
        memo[key] = best;
        best
    }
}

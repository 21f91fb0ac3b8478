//! Supervised labeled topic model over the six persuasion labels.
//!
//! Training runs collapsed Gibbs sampling where each token's topic is
//! restricted to its document's label set; inference holds the trained
//! label-word counts fixed and samples over all labels. The per-document
//! outputs are the label probabilities and the per-label token assignment
//! counts ("trigger counts") at the final sweep.
//!
//! Evaluation treats the multi-label problem as label-pivoted binary
//! classification with the PROPORTIONAL rank cutoff: for label i,
//! `TOPN_i = ceil(n_test / n_train * n_train_pos_i)` top-ranked documents
//! receive a positive prediction.

mod eval;

pub use eval::{
    cross_validate, proportional_cutoff, topn, AggregateMetric, Confusion, EvalReport, LabelStat,
    PerLabelMetric,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stable_hash, stream_rng};
use crate::textproc::TokenDoc;

/// Canonical label order used throughout the pipeline.
pub const CIALDINI_LABELS: [&str; 6] = [
    "Reciprocity",
    "Consistency",
    "SocialProof",
    "Authority",
    "Liking",
    "Scarcity",
];

pub fn default_labels() -> Vec<String> {
    CIALDINI_LABELS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Error)]
pub enum LldaError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("empty vocabulary: no tokens in any training document")]
    EmptyVocabulary,
    #[error("document '{0}' has no labels")]
    UnlabeledDoc(String),
    #[error("label '{0}' does not appear in any training document")]
    UnusedLabel(String),
    #[error("document '{0}' uses label '{1}' not present in the config")]
    UnknownLabel(String, String),
    #[error("need at least {folds} labeled documents for {folds}-fold CV, got {docs}")]
    TooFewDocs { folds: usize, docs: usize },
    #[error("model artifact error: {0}")]
    Artifact(String),
}

/// Gibbs hyperparameters and seeding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldaConfig {
    pub alpha: f64,
    pub beta: f64,
    pub n_iterations: u32,
    /// Sweeps discarded before the counts are read off. Only meaningful
    /// together with `average_last`; the single-sample default reads the
    /// final sweep.
    pub burn_in: u32,
    /// 0 = take counts at the final sweep. N > 0 = accumulate counts over
    /// the last N sweeps (kept as integer sums; downstream probabilities
    /// are scale-normalized).
    pub average_last: u32,
    pub seed: u64,
    pub labels: Vec<String>,
}

impl Default for LldaConfig {
    fn default() -> Self {
        LldaConfig {
            alpha: 1.0,
            beta: 0.001,
            n_iterations: 1000,
            burn_in: 900,
            average_last: 0,
            seed: 0,
            labels: default_labels(),
        }
    }
}

impl LldaConfig {
    pub fn k_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self) -> Result<(), LldaError> {
        if !(self.alpha > 0.0) {
            return Err(LldaError::BadConfig("alpha must be > 0".into()));
        }
        if !(self.beta > 0.0) {
            return Err(LldaError::BadConfig("beta must be > 0".into()));
        }
        if self.labels.is_empty() {
            return Err(LldaError::BadConfig("labels must be non-empty".into()));
        }
        let uniq: BTreeSet<&String> = self.labels.iter().collect();
        if uniq.len() != self.labels.len() {
            return Err(LldaError::BadConfig("labels must be distinct".into()));
        }
        if self.n_iterations == 0 {
            return Err(LldaError::BadConfig("n_iterations must be >= 1".into()));
        }
        if self.burn_in >= self.n_iterations && self.average_last > 0 {
            return Err(LldaError::BadConfig(
                "burn_in must be < n_iterations".into(),
            ));
        }
        Ok(())
    }
}

/// Trained model state: label-word count tables plus the config that
/// produced them. Serializes to a versioned JSON artifact that round-trips
/// bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldaModel {
    pub format_version: u32,
    pub vocab: Vec<String>,
    /// `[k_labels][vocab]` token assignment counts.
    pub label_word_counts: Vec<Vec<u64>>,
    /// Per-label totals; `label_totals[k] == sum(label_word_counts[k])`.
    pub label_totals: Vec<u64>,
    pub config: LldaConfig,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl LldaModel {
    pub fn k_labels(&self) -> usize {
        self.config.k_labels()
    }

    /// Smoothed topic-word distribution `(n_wk + beta) / (n_k + V*beta)`.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let v = self.vocab.len() as f64;
        self.label_word_counts
            .iter()
            .zip(&self.label_totals)
            .map(|(row, total)| {
                let denom = *total as f64 + v * self.config.beta;
                row.iter()
                    .map(|n| (*n as f64 + self.config.beta) / denom)
                    .collect()
            })
            .collect()
    }

    /// Top `n` keywords for a label with their phi weights.
    pub fn top_words(&self, label_idx: usize, n: usize) -> Vec<(String, f64)> {
        let phi = &self.phi()[label_idx];
        let mut order: Vec<usize> = (0..self.vocab.len()).collect();
        order.sort_by(|a, b| phi[*b].partial_cmp(&phi[*a]).unwrap().then(a.cmp(b)));
        order
            .into_iter()
            .take(n)
            .map(|w| (self.vocab[w].clone(), phi[w]))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), LldaError> {
        let json = serde_json::to_string(self).map_err(|e| LldaError::Artifact(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| LldaError::Artifact(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LldaError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LldaError::Artifact(e.to_string()))?;
        let model: LldaModel =
            serde_json::from_str(&text).map_err(|e| LldaError::Artifact(e.to_string()))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(LldaError::Artifact(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

/// Per-email classification output: token counts assigned to each label
/// ("vulnerability triggers"), the label probabilities, and the presence
/// decision (filled by the rank cutoff or the deployment heuristic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveProfile {
    pub email_id: String,
    pub trigger_counts: Vec<u32>,
    pub label_probs: Vec<f64>,
    pub vulns_present: Vec<bool>,
    /// True when no token carried signal (empty or fully out-of-vocabulary
    /// document); probabilities are uniform in that case.
    pub no_signal: bool,
}

impl CognitiveProfile {
    pub fn vuln_count(&self) -> usize {
        self.vulns_present.iter().filter(|b| **b).count()
    }
}

/// Presence heuristic for unlabeled production emails, where no test cohort
/// exists for the rank cutoff: present iff `P(label) >= 1/K + margin`.
pub fn apply_presence_heuristic(profile: &mut CognitiveProfile, margin: f64) {
    let k = profile.label_probs.len() as f64;
    let cut = 1.0 / k + margin;
    profile.vulns_present = profile
        .label_probs
        .iter()
        .map(|p| *p >= cut && !profile.no_signal)
        .collect();
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub sweeps: u32,
    /// Count-conservation and label-restriction checks executed (every
    /// 100th sweep plus the final one); any violation panics.
    pub invariant_checks: u32,
}

struct TrainState {
    // docs as vocab ids, allowed label ids, current assignment
    docs: Vec<Vec<u32>>,
    allowed: Vec<Vec<u16>>,
    assign: Vec<Vec<u16>>,
    nwk: Vec<Vec<u64>>, // [k][V]
    nk: Vec<u64>,
    nkd: Vec<Vec<u64>>, // [doc][k]
}

impl TrainState {
    fn check_invariants(&self) {
        let mut total_tokens = 0u64;
        for d in 0..self.docs.len() {
            let len = self.docs[d].len() as u64;
            total_tokens += len;
            let per_doc: u64 = self.nkd[d].iter().sum();
            assert_eq!(per_doc, len, "count conservation violated in doc {d}");
            for (pos, z) in self.assign[d].iter().enumerate() {
                assert!(
                    self.allowed[d].contains(z),
                    "label restriction violated: doc {d} pos {pos} label {z}"
                );
            }
        }
        let total_nwk: u64 = self.nwk.iter().flatten().sum();
        assert_eq!(total_nwk, total_tokens, "global count conservation violated");
        let totals_ok = self
            .nk
            .iter()
            .enumerate()
            .all(|(k, nk)| *nk == self.nwk[k].iter().sum::<u64>());
        assert!(totals_ok, "label totals out of sync");
    }
}

/// Train by collapsed Gibbs sampling. Deterministic for a fixed seed:
/// identical inputs produce bit-identical count tables.
pub fn train(
    docs: &[TokenDoc],
    labels: &BTreeMap<String, BTreeSet<String>>,
    cfg: &LldaConfig,
) -> Result<LldaModel, LldaError> {
    train_with_diagnostics(docs, labels, cfg).map(|(m, _)| m)
}

pub fn train_with_diagnostics(
    docs: &[TokenDoc],
    labels: &BTreeMap<String, BTreeSet<String>>,
    cfg: &LldaConfig,
) -> Result<(LldaModel, TrainDiagnostics), LldaError> {
    cfg.validate()?;
    let k = cfg.k_labels();
    let label_idx: HashMap<&str, u16> = cfg
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u16))
        .collect();

    // Resolve label sets and validate coverage.
    let mut allowed = Vec::with_capacity(docs.len());
    let mut label_used = vec![false; k];
    for doc in docs {
        let set = labels
            .get(&doc.email_id)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| LldaError::UnlabeledDoc(doc.email_id.clone()))?;
        let mut ids = Vec::with_capacity(set.len());
        for name in set {
            let id = *label_idx
                .get(name.as_str())
                .ok_or_else(|| LldaError::UnknownLabel(doc.email_id.clone(), name.clone()))?;
            label_used[id as usize] = true;
            ids.push(id);
        }
        ids.sort_unstable();
        ids.dedup();
        allowed.push(ids);
    }
    if let Some(unused) = label_used.iter().position(|u| !u) {
        return Err(LldaError::UnusedLabel(cfg.labels[unused].clone()));
    }

    let vocab_tokens: BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    if vocab_tokens.is_empty() {
        return Err(LldaError::EmptyVocabulary);
    }
    let vocab: Vec<String> = vocab_tokens.into_iter().map(str::to_string).collect();
    let vocab_idx: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    let v = vocab.len();

    let doc_ids: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| d.tokens.iter().map(|t| vocab_idx[t.as_str()]).collect())
        .collect();

    let mut state = TrainState {
        allowed,
        assign: doc_ids.iter().map(|d| vec![0u16; d.len()]).collect(),
        nwk: vec![vec![0u64; v]; k],
        nk: vec![0u64; k],
        nkd: vec![vec![0u64; k]; doc_ids.len()],
        docs: doc_ids,
    };

    let mut rng = stream_rng(cfg.seed, 0);
    for d in 0..state.docs.len() {
        for pos in 0..state.docs[d].len() {
            let choices = &state.allowed[d];
            let z = if choices.len() == 1 {
                choices[0]
            } else {
                choices[rng.random_range(0..choices.len())]
            };
            let w = state.docs[d][pos] as usize;
            state.assign[d][pos] = z;
            state.nwk[z as usize][w] += 1;
            state.nk[z as usize] += 1;
            state.nkd[d][z as usize] += 1;
        }
    }

    let vbeta = v as f64 * cfg.beta;
    let mut acc: Option<Vec<Vec<u64>>> = if cfg.average_last > 0 {
        Some(vec![vec![0u64; v]; k])
    } else {
        None
    };
    let mut diagnostics = TrainDiagnostics::default();
    let mut weights = vec![0.0f64; 8];

    for sweep in 1..=cfg.n_iterations {
        for d in 0..state.docs.len() {
            let choices = &state.allowed[d];
            if choices.len() == 1 {
                continue; // assignment forced, nothing to resample
            }
            for pos in 0..state.docs[d].len() {
                let w = state.docs[d][pos] as usize;
                let old = state.assign[d][pos] as usize;
                state.nwk[old][w] -= 1;
                state.nk[old] -= 1;
                state.nkd[d][old] -= 1;

                if weights.len() < choices.len() {
                    weights.resize(choices.len(), 0.0);
                }
                let mut total = 0.0;
                for (ci, kid) in choices.iter().enumerate() {
                    let kk = *kid as usize;
                    let p = (state.nwk[kk][w] as f64 + cfg.beta)
                        / (state.nk[kk] as f64 + vbeta)
                        * (state.nkd[d][kk] as f64 + cfg.alpha);
                    total += p;
                    weights[ci] = total;
                }
                let draw = rng.random_range(0.0..total);
                let mut chosen = choices.len() - 1;
                for (ci, bound) in weights[..choices.len()].iter().enumerate() {
                    if draw < *bound {
                        chosen = ci;
                        break;
                    }
                }
                let z = choices[chosen] as usize;
                state.assign[d][pos] = z as u16;
                state.nwk[z][w] += 1;
                state.nk[z] += 1;
                state.nkd[d][z] += 1;
            }
        }
        diagnostics.sweeps = sweep;
        if sweep % 100 == 0 || sweep == cfg.n_iterations {
            state.check_invariants();
            diagnostics.invariant_checks += 1;
        }
        if let Some(acc) = acc.as_mut() {
            if sweep > cfg.burn_in && sweep + cfg.average_last > cfg.n_iterations {
                for kk in 0..k {
                    for w in 0..v {
                        acc[kk][w] += state.nwk[kk][w];
                    }
                }
            }
        }
    }

    let label_word_counts = acc.unwrap_or(state.nwk);
    let label_totals: Vec<u64> = label_word_counts
        .iter()
        .map(|row| row.iter().sum())
        .collect();

    Ok((
        LldaModel {
            format_version: MODEL_FORMAT_VERSION,
            vocab,
            label_word_counts,
            label_totals,
            config: cfg.clone(),
        },
        diagnostics,
    ))
}

/// Gibbs inference for one document against a trained model. Model counts
/// stay fixed; all labels are admissible. The per-document RNG stream is
/// derived from the email id, so inference over a corpus can run in any
/// order (or in parallel) without changing results.
pub fn infer(model: &LldaModel, doc: &TokenDoc, cfg: &LldaConfig) -> CognitiveProfile {
    let vocab_idx: HashMap<&str, u32> = model
        .vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    infer_prepared(model, &vocab_idx, doc, cfg)
}

/// Inference with a caller-prepared vocab index (avoids rebuilding the
/// token map per document when classifying a whole corpus).
pub fn infer_prepared(
    model: &LldaModel,
    vocab_idx: &HashMap<&str, u32>,
    doc: &TokenDoc,
    cfg: &LldaConfig,
) -> CognitiveProfile {
    let k = model.k_labels();
    let tokens: Vec<u32> = doc
        .tokens
        .iter()
        .filter_map(|t| vocab_idx.get(t.as_str()).copied())
        .collect();

    if tokens.is_empty() {
        return CognitiveProfile {
            email_id: doc.email_id.clone(),
            trigger_counts: vec![0; k],
            label_probs: vec![1.0 / k as f64; k],
            vulns_present: vec![false; k],
            no_signal: true,
        };
    }

    let vbeta = model.vocab.len() as f64 * cfg.beta;
    // Per-token phi factors are constant during inference.
    let phi_w: Vec<Vec<f64>> = tokens
        .iter()
        .map(|w| {
            (0..k)
                .map(|kk| {
                    (model.label_word_counts[kk][*w as usize] as f64 + cfg.beta)
                        / (model.label_totals[kk] as f64 + vbeta)
                })
                .collect()
        })
        .collect();

    let mut rng = stream_rng(cfg.seed, stable_hash(&doc.email_id));
    let mut assign = vec![0u16; tokens.len()];
    let mut nkd = vec![0u64; k];
    for (pos, z) in assign.iter_mut().enumerate() {
        *z = rng.random_range(0..k) as u16;
        let _ = pos;
        nkd[*z as usize] += 1;
    }

    let mut weights = vec![0.0f64; k];
    for _sweep in 0..cfg.n_iterations {
        for pos in 0..tokens.len() {
            let old = assign[pos] as usize;
            nkd[old] -= 1;
            let mut total = 0.0;
            for kk in 0..k {
                total += phi_w[pos][kk] * (nkd[kk] as f64 + cfg.alpha);
                weights[kk] = total;
            }
            let draw = rng.random_range(0.0..total);
            let mut chosen = k - 1;
            for (kk, bound) in weights.iter().enumerate() {
                if draw < *bound {
                    chosen = kk;
                    break;
                }
            }
            assign[pos] = chosen as u16;
            nkd[chosen] += 1;
        }
    }

    let n_used = tokens.len() as f64;
    let denom = n_used + k as f64 * cfg.alpha;
    CognitiveProfile {
        email_id: doc.email_id.clone(),
        trigger_counts: nkd.iter().map(|n| *n as u32).collect(),
        label_probs: nkd
            .iter()
            .map(|n| (*n as f64 + cfg.alpha) / denom)
            .collect(),
        vulns_present: vec![false; k],
        no_signal: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tokens: &[&str]) -> TokenDoc {
        TokenDoc {
            email_id: id.into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn label_map(entries: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        entries
            .iter()
            .map(|(id, ls)| {
                (
                    id.to_string(),
                    ls.iter().map(|l| l.to_string()).collect::<BTreeSet<_>>(),
                )
            })
            .collect()
    }

    /// Two labels with fully disjoint vocabularies, single-labeled docs.
    fn tiny_cfg(seed: u64) -> LldaConfig {
        LldaConfig {
            labels: vec!["A".into(), "B".into()],
            n_iterations: 200,
            burn_in: 150,
            seed,
            ..LldaConfig::default()
        }
    }

    fn separable_docs() -> (Vec<TokenDoc>, BTreeMap<String, BTreeSet<String>>) {
        let docs = vec![
            doc("a1", &["apple", "avocado", "apricot", "apple"]),
            doc("a2", &["apple", "apricot", "avocado"]),
            doc("b1", &["banana", "blueberry", "bramble"]),
            doc("b2", &["banana", "bramble", "blueberry", "banana"]),
        ];
        let labels = label_map(&[
            ("a1", &["A"]),
            ("a2", &["A"]),
            ("b1", &["B"]),
            ("b2", &["B"]),
        ]);
        (docs, labels)
    }

    #[test]
    fn separable_labels_own_their_vocabulary() {
        let (docs, labels) = separable_docs();
        let model = train(&docs, &labels, &tiny_cfg(11)).unwrap();
        let a_words: BTreeSet<String> =
            model.top_words(0, 3).into_iter().map(|(w, _)| w).collect();
        let b_words: BTreeSet<String> =
            model.top_words(1, 3).into_iter().map(|(w, _)| w).collect();
        assert!(a_words.contains("apple"));
        assert!(b_words.contains("banana"));
        assert!(a_words.is_disjoint(&b_words));
        // every "a" token must be counted under label A (restriction)
        let apple = model.vocab.iter().position(|w| w == "apple").unwrap();
        assert_eq!(model.label_word_counts[1][apple], 0);
    }

    #[test]
    fn same_seed_trains_bit_identical_models() {
        let (docs, labels) = separable_docs();
        let m1 = train(&docs, &labels, &tiny_cfg(42)).unwrap();
        let m2 = train(&docs, &labels, &tiny_cfg(42)).unwrap();
        assert_eq!(m1.label_word_counts, m2.label_word_counts);
        assert_eq!(m1, m2);
        let m3 = train(&docs, &labels, &tiny_cfg(43)).unwrap();
        assert!(m1 == m3 || m1.label_word_counts == m3.label_word_counts || m1 != m3);
    }

    #[test]
    fn count_conservation_after_training() {
        let (docs, labels) = separable_docs();
        let (model, diag) = train_with_diagnostics(&docs, &labels, &tiny_cfg(7)).unwrap();
        let total_tokens: u64 = docs.iter().map(|d| d.tokens.len() as u64).sum();
        let total_counts: u64 = model.label_totals.iter().sum();
        assert_eq!(total_tokens, total_counts);
        assert_eq!(diag.sweeps, 200);
        assert_eq!(diag.invariant_checks, 2); // sweeps 100 and 200
    }

    #[test]
    fn phi_rows_sum_to_one() {
        let (docs, labels) = separable_docs();
        let model = train(&docs, &labels, &tiny_cfg(7)).unwrap();
        for row in model.phi() {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_errors_fire() {
        let (docs, mut labels) = separable_docs();
        labels.remove("a1");
        assert!(matches!(
            train(&docs, &labels, &tiny_cfg(1)),
            Err(LldaError::UnlabeledDoc(_))
        ));

        let (docs, labels) = separable_docs();
        let mut cfg = tiny_cfg(1);
        cfg.labels.push("C".into());
        assert!(matches!(
            train(&docs, &labels, &cfg),
            Err(LldaError::UnusedLabel(l)) if l == "C"
        ));

        let empty_docs = vec![doc("a1", &[]), doc("b1", &[])];
        let labels = label_map(&[("a1", &["A"]), ("b1", &["B"])]);
        assert!(matches!(
            train(&empty_docs, &labels, &tiny_cfg(1)),
            Err(LldaError::EmptyVocabulary)
        ));
    }

    #[test]
    fn inference_concentrates_on_the_generating_label() {
        let (docs, labels) = separable_docs();
        let model = train(&docs, &labels, &tiny_cfg(5)).unwrap();
        let test = doc("t1", &["apple", "apricot", "apple", "avocado", "apple"]);
        let profile = infer(&model, &test, &tiny_cfg(5));
        assert!(
            profile.label_probs[0] >= 0.8,
            "P(A) = {}",
            profile.label_probs[0]
        );
        assert!(profile.trigger_counts[0] >= 4);
        assert!(!profile.no_signal);
        let s: f64 = profile.label_probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_and_oov_docs_get_uniform_no_signal_profiles() {
        let (docs, labels) = separable_docs();
        let model = train(&docs, &labels, &tiny_cfg(5)).unwrap();
        for test in [doc("t1", &[]), doc("t2", &["zzz", "yyy"])] {
            let profile = infer(&model, &test, &tiny_cfg(5));
            assert!(profile.no_signal);
            assert_eq!(profile.trigger_counts, vec![0, 0]);
            assert!(profile.label_probs.iter().all(|p| (p - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn trigger_counts_bounded_by_token_count() {
        let (docs, labels) = separable_docs();
        let model = train(&docs, &labels, &tiny_cfg(5)).unwrap();
        let test = doc("t1", &["apple", "banana", "zzz"]);
        let profile = infer(&model, &test, &tiny_cfg(5));
        let assigned: u32 = profile.trigger_counts.iter().sum();
        assert!(assigned as usize <= test.tokens.len());
    }

    #[test]
    fn model_json_round_trips_bit_exactly() {
        let (docs, labels) = separable_docs();
        let model = train(&docs, &labels, &tiny_cfg(9)).unwrap();
        let json1 = serde_json::to_string(&model).unwrap();
        let back: LldaModel = serde_json::from_str(&json1).unwrap();
        assert_eq!(model, back);
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json1, json2);
    }

    #[test]
    fn presence_heuristic_uses_margin_over_uniform() {
        let mut p = CognitiveProfile {
            email_id: "e".into(),
            trigger_counts: vec![5, 0],
            label_probs: vec![0.8, 0.2],
            vulns_present: vec![false, false],
            no_signal: false,
        };
        apply_presence_heuristic(&mut p, 0.05);
        assert_eq!(p.vulns_present, vec![true, false]);
        assert_eq!(p.vuln_count(), 1);
    }

    // Mirrors the recycling-style example: several labels interleaved in
    // one body produce triggers on most of them.
    #[test]
    fn interleaved_multi_label_doc_triggers_many_labels() {
        let labels: Vec<String> = (0..6).map(|i| format!("L{i}")).collect();
        let mut docs = Vec::new();
        let mut map = BTreeMap::new();
        for (li, label) in labels.iter().enumerate() {
            for d in 0..3 {
                let id = format!("{label}d{d}");
                let tokens: Vec<String> =
                    (0..8).map(|t| format!("w{li}t{t}")).collect();
                docs.push(TokenDoc {
                    email_id: id.clone(),
                    tokens,
                });
                map.insert(id, BTreeSet::from([label.clone()]));
            }
        }
        let cfg = LldaConfig {
            labels,
            n_iterations: 300,
            burn_in: 250,
            seed: 3,
            ..LldaConfig::default()
        };
        let model = train(&docs, &map, &cfg).unwrap();
        // interleave tokens from 5 of the 6 label vocabularies
        let mixed: Vec<String> = (0..5)
            .flat_map(|li| (0..4).map(move |t| format!("w{li}t{t}")))
            .collect();
        let profile = infer(
            &model,
            &TokenDoc {
                email_id: "mixed".into(),
                tokens: mixed,
            },
            &cfg,
        );
        let labels_hit = profile.trigger_counts.iter().filter(|c| **c > 0).count();
        assert!(labels_hit >= 4, "only {labels_hit} labels triggered");
    }
}

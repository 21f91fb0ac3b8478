//! PROPORTIONAL rank-cutoff evaluation with repeated k-fold CV.
//!
//! Macro scores are mean ± sd of the per-fold results; micro scores pool
//! the confusion counts over labels within a fold (and over folds for the
//! per-label view). A label missing from a training fold is skipped in that
//! fold and reported.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{infer_prepared, train, LldaConfig, LldaError};
use crate::rng::stream_rng;
use crate::textproc::TokenDoc;
use rand::seq::SliceRandom;

/// `TOPN_i = ceil(n_test / n_train * n_train_pos)` clamped to `n_test`.
pub fn topn(n_train: usize, n_test: usize, n_train_pos: usize) -> usize {
    if n_train == 0 {
        return 0;
    }
    let num = n_test as u64 * n_train_pos as u64;
    (num.div_ceil(n_train as u64) as usize).min(n_test)
}

/// Positive prediction sets per label: the top `TOPN_i` documents by score,
/// ties broken by stable document order. `scores[doc][label]`.
pub fn proportional_cutoff(
    scores: &[Vec<f64>],
    n_train_docs: usize,
    n_train_pos: &[usize],
) -> Vec<Vec<usize>> {
    let n_test = scores.len();
    n_train_pos
        .iter()
        .enumerate()
        .map(|(label, pos)| {
            let take = topn(n_train_docs, n_test, *pos);
            let mut order: Vec<usize> = (0..n_test).collect();
            order.sort_by(|a, b| {
                scores[*b][label]
                    .partial_cmp(&scores[*a][label])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(b))
            });
            let mut chosen: Vec<usize> = order.into_iter().take(take).collect();
            chosen.sort_unstable();
            chosen
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        ratio(2 * self.tp, denom)
    }
}

fn ratio(num: u64, denom: u64) -> Option<f64> {
    (denom > 0).then(|| num as f64 / denom as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetric {
    pub macro_mean: f64,
    pub macro_sd: f64,
    pub micro_mean: f64,
    pub micro_sd: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelStat {
    pub macro_mean: f64,
    pub macro_sd: f64,
    /// Metric on the confusion counts pooled over every fold.
    pub micro: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerLabelMetric {
    pub label: String,
    pub sensitivity: LabelStat,
    pub specificity: LabelStat,
    pub precision: LabelStat,
    pub f1: LabelStat,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub folds_run: usize,
    pub skipped_label_folds: usize,
    pub sensitivity: AggregateMetric,
    pub specificity: AggregateMetric,
    pub precision: AggregateMetric,
    pub f1: AggregateMetric,
    pub per_label: Vec<PerLabelMetric>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Greedy multi-label stratification: documents (in seeded shuffled order,
/// rarest label first) go to the fold where their labels are least
/// represented. Exact stratification is impossible for multi-label data;
/// this keeps every fold's label counts close.
fn stratified_folds(
    doc_labels: &[Vec<usize>],
    k_labels: usize,
    folds: usize,
    seed: u64,
    repeat: u64,
) -> Vec<usize> {
    let n = doc_labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, 0x5f01d ^ repeat);
    order.shuffle(&mut rng);

    let mut label_freq = vec![0usize; k_labels];
    for ls in doc_labels {
        for l in ls {
            label_freq[*l] += 1;
        }
    }
    // rarest dominant label first so scarce labels spread before folds fill
    order.sort_by_key(|d| {
        doc_labels[*d]
            .iter()
            .map(|l| label_freq[*l])
            .min()
            .unwrap_or(usize::MAX)
    });

    let mut fold_of = vec![0usize; n];
    let mut fold_label = vec![vec![0usize; k_labels]; folds];
    let mut fold_size = vec![0usize; folds];
    for d in order {
        let mut best = 0usize;
        let mut best_key = (usize::MAX, usize::MAX, usize::MAX);
        for f in 0..folds {
            let overlap: usize = doc_labels[d].iter().map(|l| fold_label[f][*l]).sum();
            let key = (overlap, fold_size[f], f);
            if key < best_key {
                best_key = key;
                best = f;
            }
        }
        fold_of[d] = best;
        fold_size[best] += 1;
        for l in &doc_labels[d] {
            fold_label[best][*l] += 1;
        }
    }
    fold_of
}

struct FoldResult {
    per_label: Vec<Option<Confusion>>, // None when skipped
    skipped: usize,
}

/// `repeats` x `folds` cross validation; folds and repeats run in parallel,
/// each with an independent seeded chain, and results are reduced in fold
/// order so the report is reproducible.
pub fn cross_validate(
    docs: &[TokenDoc],
    labels: &BTreeMap<String, BTreeSet<String>>,
    cfg: &LldaConfig,
    repeats: usize,
    folds: usize,
    seed: u64,
) -> Result<EvalReport, LldaError> {
    cfg.validate()?;
    if docs.len() < folds || folds < 2 {
        return Err(LldaError::TooFewDocs {
            folds,
            docs: docs.len(),
        });
    }
    let k = cfg.k_labels();
    let label_idx: BTreeMap<&str, usize> = cfg
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut doc_labels: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for d in docs {
        let set = labels
            .get(&d.email_id)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| LldaError::UnlabeledDoc(d.email_id.clone()))?;
        let mut ids = Vec::new();
        for name in set {
            let id = *label_idx
                .get(name.as_str())
                .ok_or_else(|| LldaError::UnknownLabel(d.email_id.clone(), name.clone()))?;
            ids.push(id);
        }
        ids.sort_unstable();
        doc_labels.push(ids);
    }

    let jobs: Vec<(usize, usize)> = (0..repeats)
        .flat_map(|r| (0..folds).map(move |f| (r, f)))
        .collect();

    let fold_results: Vec<FoldResult> = jobs
        .par_iter()
        .map(|(repeat, fold)| {
            let assignment =
                stratified_folds(&doc_labels, k, folds, seed, *repeat as u64);
            let train_idx: Vec<usize> = (0..docs.len())
                .filter(|d| assignment[*d] != *fold)
                .collect();
            let test_idx: Vec<usize> = (0..docs.len())
                .filter(|d| assignment[*d] == *fold)
                .collect();

            let mut n_train_pos = vec![0usize; k];
            for d in &train_idx {
                for l in &doc_labels[*d] {
                    n_train_pos[*l] += 1;
                }
            }
            let trainable: Vec<bool> = n_train_pos.iter().map(|n| *n > 0).collect();
            let skipped = trainable.iter().filter(|t| !**t).count();

            // Train on the fold's complement, restricted to labels present.
            let fold_labels: Vec<String> = cfg
                .labels
                .iter()
                .enumerate()
                .filter(|(i, _)| trainable[*i])
                .map(|(_, l)| l.clone())
                .collect();
            let mut fold_cfg = cfg.clone();
            fold_cfg.labels = fold_labels;
            fold_cfg.seed = seed
                ^ ((*repeat as u64 * folds as u64 + *fold as u64 + 1)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let train_docs: Vec<TokenDoc> =
                train_idx.iter().map(|d| docs[*d].clone()).collect();
            let train_labels: BTreeMap<String, BTreeSet<String>> = train_idx
                .iter()
                .map(|d| {
                    let keep: BTreeSet<String> = doc_labels[*d]
                        .iter()
                        .filter(|l| trainable[**l])
                        .map(|l| cfg.labels[*l].clone())
                        .collect();
                    (docs[*d].email_id.clone(), keep)
                })
                .filter(|(_, s)| !s.is_empty())
                .collect();
            let kept_train: Vec<TokenDoc> = train_docs
                .into_iter()
                .filter(|d| train_labels.contains_key(&d.email_id))
                .collect();

            let model = match train(&kept_train, &train_labels, &fold_cfg) {
                Ok(m) => m,
                Err(_) => {
                    return FoldResult {
                        per_label: vec![None; k],
                        skipped: k,
                    }
                }
            };
            let vocab_idx: std::collections::HashMap<&str, u32> = model
                .vocab
                .iter()
                .enumerate()
                .map(|(i, t)| (t.as_str(), i as u32))
                .collect();

            // Score test docs; map fold-local label indices back to global.
            let local_of_global: BTreeMap<usize, usize> = fold_cfg
                .labels
                .iter()
                .enumerate()
                .map(|(local, name)| (label_idx[name.as_str()], local))
                .collect();
            let scores: Vec<Vec<f64>> = test_idx
                .iter()
                .map(|d| {
                    let profile = infer_prepared(&model, &vocab_idx, &docs[*d], &fold_cfg);
                    (0..k)
                        .map(|g| {
                            local_of_global
                                .get(&g)
                                .map(|l| profile.label_probs[*l])
                                .unwrap_or(0.0)
                        })
                        .collect()
                })
                .collect();

            let positives =
                proportional_cutoff(&scores, kept_train.len(), &n_train_pos);
            let per_label: Vec<Option<Confusion>> = (0..k)
                .map(|l| {
                    if !trainable[l] {
                        return None;
                    }
                    let pos_set: BTreeSet<usize> = positives[l].iter().copied().collect();
                    let mut c = Confusion::default();
                    for (ti, d) in test_idx.iter().enumerate() {
                        let truth = doc_labels[*d].contains(&l);
                        let predicted = pos_set.contains(&ti);
                        match (truth, predicted) {
                            (true, true) => c.tp += 1,
                            (true, false) => c.fn_ += 1,
                            (false, true) => c.fp += 1,
                            (false, false) => c.tn += 1,
                        }
                    }
                    Some(c)
                })
                .collect();
            FoldResult {
                per_label,
                skipped,
            }
        })
        .collect();

    // Aggregate.
    let metric_of = |c: &Confusion, which: usize| -> Option<f64> {
        match which {
            0 => c.sensitivity(),
            1 => c.specificity(),
            2 => c.precision(),
            _ => c.f1(),
        }
    };

    let mut aggregate = [AggregateMetric::default(); 4];
    for (which, agg) in aggregate.iter_mut().enumerate() {
        let mut fold_macros = Vec::new();
        let mut fold_micros = Vec::new();
        for fr in &fold_results {
            let label_values: Vec<f64> = fr
                .per_label
                .iter()
                .flatten()
                .filter_map(|c| metric_of(c, which))
                .collect();
            if !label_values.is_empty() {
                let (m, _) = mean_sd(&label_values);
                fold_macros.push(m);
            }
            let mut pooled = Confusion::default();
            for c in fr.per_label.iter().flatten() {
                pooled.add(c);
            }
            if let Some(v) = metric_of(&pooled, which) {
                fold_micros.push(v);
            }
        }
        let (mm, ms) = mean_sd(&fold_macros);
        let (um, us) = mean_sd(&fold_micros);
        *agg = AggregateMetric {
            macro_mean: mm,
            macro_sd: ms,
            micro_mean: um,
            micro_sd: us,
        };
    }

    let per_label: Vec<PerLabelMetric> = (0..k)
        .map(|l| {
            let mut pooled = Confusion::default();
            let mut stat = |which: usize| {
                let values: Vec<f64> = fold_results
                    .iter()
                    .filter_map(|fr| fr.per_label[l].as_ref())
                    .filter_map(|c| metric_of(c, which))
                    .collect();
                let (m, s) = mean_sd(&values);
                (m, s)
            };
            let stats: Vec<(f64, f64)> = (0..4).map(&mut stat).collect();
            for fr in &fold_results {
                if let Some(c) = &fr.per_label[l] {
                    pooled.add(c);
                }
            }
            let micro = |which: usize| metric_of(&pooled, which).unwrap_or(f64::NAN);
            let mk = |which: usize| LabelStat {
                macro_mean: stats[which].0,
                macro_sd: stats[which].1,
                micro: micro(which),
            };
            PerLabelMetric {
                label: cfg.labels[l].clone(),
                sensitivity: mk(0),
                specificity: mk(1),
                precision: mk(2),
                f1: mk(3),
            }
        })
        .collect();

    Ok(EvalReport {
        labels: cfg.labels.clone(),
        folds_run: fold_results.len(),
        skipped_label_folds: fold_results.iter().map(|f| f.skipped).sum(),
        sensitivity: aggregate[0],
        specificity: aggregate[1],
        precision: aggregate[2],
        f1: aggregate[3],
        per_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topn_formula_examples() {
        // ceil(20/79 * 40) = ceil(10.126...) = 11
        assert_eq!(topn(79, 20, 40), 11);
        assert_eq!(topn(79, 20, 0), 0);
        assert_eq!(topn(50, 50, 17), 17); // n_test == n_train
        assert_eq!(topn(10, 5, 100), 5); // clamped to n_test
    }

    #[test]
    fn cutoff_takes_top_scores_with_stable_ties() {
        let scores = vec![
            vec![0.9, 0.1],
            vec![0.5, 0.5],
            vec![0.5, 0.9],
            vec![0.1, 0.5],
        ];
        // label 0: TOPN = ceil(4/4*2) = 2 -> docs 0 and 1 (1 before 2 on tie)
        let cut = proportional_cutoff(&scores, 4, &[2, 1]);
        assert_eq!(cut[0], vec![0, 1]);
        assert_eq!(cut[1], vec![2]);
        let total: usize = cut.iter().map(|c| c.len()).sum();
        assert_eq!(total, 2 + 1);
    }

    #[test]
    fn confusion_metrics() {
        let c = Confusion {
            tp: 8,
            fp: 2,
            tn: 7,
            fn_: 3,
        };
        assert!((c.sensitivity().unwrap() - 8.0 / 11.0).abs() < 1e-12);
        assert!((c.specificity().unwrap() - 7.0 / 9.0).abs() < 1e-12);
        assert!((c.precision().unwrap() - 0.8).abs() < 1e-12);
        assert!((c.f1().unwrap() - 16.0 / 21.0).abs() < 1e-12);
        let empty = Confusion::default();
        assert!(empty.sensitivity().is_none());
    }

    #[test]
    fn stratified_folds_balance_label_counts() {
        // 40 docs, 2 labels, label 1 rare (8 docs)
        let doc_labels: Vec<Vec<usize>> = (0..40)
            .map(|i| if i % 5 == 0 { vec![0, 1] } else { vec![0] })
            .collect();
        let folds = stratified_folds(&doc_labels, 2, 4, 9, 0);
        let mut rare_per_fold = vec![0usize; 4];
        let mut size_per_fold = vec![0usize; 4];
        for (d, f) in folds.iter().enumerate() {
            size_per_fold[*f] += 1;
            if doc_labels[d].contains(&1) {
                rare_per_fold[*f] += 1;
            }
        }
        assert_eq!(size_per_fold.iter().sum::<usize>(), 40);
        for f in 0..4 {
            assert_eq!(rare_per_fold[f], 2, "rare label unevenly spread");
            assert_eq!(size_per_fold[f], 10);
        }
    }
}

//! Near-duplicate detection and campaign clustering.
//!
//! Reported emails come in many near-identical copies (same attack, salted
//! salutations and the odd token swapped). We compute all pairwise cosine
//! similarities over L2-normalized bag-of-words vectors, pick the duplicate
//! threshold by a bootstrapped sensitivity/specificity intersection on a
//! manually labeled sample, and group everything at or above the threshold
//! into campaigns via connected components.
//!
//! Cosine-threshold similarity is not transitive; connected components
//! (union-find) is the total, deterministic rule used to assign the shared
//! duplicate id.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Email;
use crate::rng::stream_rng;
use crate::textproc::{cosine, TfVector};
use rand::Rng;

#[derive(Debug, Error)]
pub enum DedupError {
    #[error("cannot tune: single class")]
    SingleClass,
    #[error("sample_size {sample_size} exceeds labeled set size {labeled}")]
    SampleTooLarge { sample_size: usize, labeled: usize },
    #[error("labeled ids not found among docs: {0:?}")]
    UnknownIds(Vec<String>),
    #[error(
        "threshold {threshold} is below the matrix storage floor {floor}; \
         rebuild the matrix with a lower floor"
    )]
    ThresholdBelowFloor { threshold: f64, floor: f64 },
    #[error("email {0} is missing a duplicate_id")]
    MissingDuplicateId(String),
}

/// Sparse symmetric pairwise-cosine matrix.
///
/// Entries below `floor` are dropped from the sparse form; they read back
/// as 0.0, which is only sound while every threshold compared against the
/// matrix is at least `floor` (enforced by [`assign_duplicate_ids`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    /// Upper-triangle entries (i < j) at or above `floor`, row-major order.
    pub entries: Vec<(u32, u32, f64)>,
    pub floor: f64,
    /// Rows whose document was empty (zero vector): their diagonal is 0.
    pub zero_rows: Vec<u32>,
}

pub const DEFAULT_STORAGE_FLOOR: f64 = 0.05;

/// All pairwise cosines of `docs` (which must share one vocabulary).
pub fn similarity_matrix(docs: &[TfVector], floor: f64) -> SimilarityMatrix {
    let ids = docs.iter().map(|d| d.email_id.clone()).collect();
    let zero_rows = docs
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_zero())
        .map(|(i, _)| i as u32)
        .collect();
    let rows: Vec<Vec<(u32, u32, f64)>> = (0..docs.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in (i + 1)..docs.len() {
                let s = cosine(&docs[i], &docs[j]);
                if s >= floor {
                    row.push((i as u32, j as u32, s));
                }
            }
            row
        })
        .collect();
    SimilarityMatrix {
        ids,
        entries: rows.into_iter().flatten().collect(),
        floor,
        zero_rows,
    }
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Stored similarity; dropped entries read as 0. Diagonal is 1 for
    /// non-empty documents.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return if self.zero_rows.contains(&(i as u32)) {
                0.0
            } else {
                1.0
            };
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match self
            .entries
            .binary_search_by(|(ei, ej, _)| (*ei, *ej).cmp(&(a as u32, b as u32)))
        {
            Ok(pos) => self.entries[pos].2,
            Err(_) => 0.0,
        }
    }
}

/// Result of the bootstrapped threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTuning {
    pub threshold_grid: Vec<f64>,
    pub sensitivity_mean: Vec<f64>,
    pub specificity_mean: Vec<f64>,
    pub chosen_threshold: f64,
    pub bootstrap_n: usize,
    pub sample_size: usize,
    pub seed: u64,
}

/// 0.01-step grid over [0, 1].
pub fn threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

const GRID_LEN: usize = 101;

fn grid_bin(s: f64) -> usize {
    // Largest grid index t with grid[t] <= s: pairs in bin b count as
    // "predicted duplicate" for all thresholds <= grid[b].
    ((s * 100.0).floor() as usize).min(GRID_LEN - 1)
}

/// Tune the duplicate threshold on a labeled sample.
///
/// For every threshold in the 0.01 grid we average pair-level sensitivity
/// (true-positive rate over truly-duplicate pairs) and specificity
/// (true-negative rate over truly-distinct pairs) across `bootstrap_n`
/// resamples of `sample_size` drawn with replacement. The chosen threshold
/// minimizes |sensitivity - specificity|, ties broken toward the higher
/// threshold. Bit-reproducible for a fixed seed.
pub fn tune_threshold(
    labeled: &[(String, u32)],
    docs: &[TfVector],
    bootstrap_n: usize,
    sample_size: usize,
    seed: u64,
) -> Result<ThresholdTuning, DedupError> {
    let groups: std::collections::BTreeSet<u32> = labeled.iter().map(|(_, g)| *g).collect();
    if groups.len() < 2 {
        return Err(DedupError::SingleClass);
    }
    if sample_size > labeled.len() || sample_size < 2 {
        return Err(DedupError::SampleTooLarge {
            sample_size,
            labeled: labeled.len(),
        });
    }

    // Dense similarity + same-group tables over the labeled subset.
    let by_id: BTreeMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.email_id.as_str(), i))
        .collect();
    let missing: Vec<String> = labeled
        .iter()
        .filter(|(id, _)| !by_id.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(DedupError::UnknownIds(missing));
    }
    let n = labeled.len();
    let doc_of: Vec<usize> = labeled.iter().map(|(id, _)| by_id[id.as_str()]).collect();
    let group_of: Vec<u32> = labeled.iter().map(|(_, g)| *g).collect();
    let mut sim_bin = vec![0u8; n * n];
    let mut same = vec![false; n * n];
    for a in 0..n {
        for b in 0..n {
            let s = if a == b {
                1.0
            } else {
                cosine(&docs[doc_of[a]], &docs[doc_of[b]])
            };
            sim_bin[a * n + b] = grid_bin(s) as u8;
            same[a * n + b] = group_of[a] == group_of[b];
        }
    }

    // Per-replicate sensitivity/specificity curves, reduced in replicate
    // order so the result does not depend on scheduling.
    let per_replicate: Vec<([f64; GRID_LEN], [f64; GRID_LEN], bool, bool)> = (0..bootstrap_n)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep as u64);
            let mut dup_hist = [0u32; GRID_LEN];
            let mut non_hist = [0u32; GRID_LEN];
            let sample: Vec<usize> = (0..sample_size).map(|_| rng.random_range(0..n)).collect();
            for u in 0..sample_size {
                let iu = sample[u] * n;
                for &v_idx in &sample[u + 1..] {
                    let bin = sim_bin[iu + v_idx] as usize;
                    if same[iu + v_idx] {
                        dup_hist[bin] += 1;
                    } else {
                        non_hist[bin] += 1;
                    }
                }
            }
            // Pairs with similarity bin >= t are predicted duplicates at
            // threshold grid[t].
            let dup_total: u32 = dup_hist.iter().sum();
            let non_total: u32 = non_hist.iter().sum();
            let mut sens = [0.0f64; GRID_LEN];
            let mut spec = [0.0f64; GRID_LEN];
            let mut dup_ge = 0u32;
            let mut non_ge = 0u32;
            for t in (0..GRID_LEN).rev() {
                dup_ge += dup_hist[t];
                non_ge += non_hist[t];
                if dup_total > 0 {
                    sens[t] = f64::from(dup_ge) / f64::from(dup_total);
                }
                if non_total > 0 {
                    spec[t] = f64::from(non_total - non_ge) / f64::from(non_total);
                }
            }
            (sens, spec, dup_total > 0, non_total > 0)
        })
        .collect();

    let mut sens_sum = vec![0.0f64; GRID_LEN];
    let mut spec_sum = vec![0.0f64; GRID_LEN];
    let mut sens_defined = 0usize;
    let mut spec_defined = 0usize;
    for (sens, spec, has_dup, has_non) in &per_replicate {
        if *has_dup {
            sens_defined += 1;
            for t in 0..GRID_LEN {
                sens_sum[t] += sens[t];
            }
        }
        if *has_non {
            spec_defined += 1;
            for t in 0..GRID_LEN {
                spec_sum[t] += spec[t];
            }
        }
    }
    let sensitivity_mean: Vec<f64> = sens_sum
        .iter()
        .map(|s| s / (sens_defined.max(1) as f64))
        .collect();
    let specificity_mean: Vec<f64> = spec_sum
        .iter()
        .map(|s| s / (spec_defined.max(1) as f64))
        .collect();

    let grid = threshold_grid();
    let mut best = 0usize;
    let mut best_gap = f64::INFINITY;
    for t in 0..GRID_LEN {
        let gap = (sensitivity_mean[t] - specificity_mean[t]).abs();
        if gap < best_gap || (gap == best_gap && t > best) {
            best_gap = gap;
            best = t;
        }
    }

    Ok(ThresholdTuning {
        chosen_threshold: grid[best],
        threshold_grid: grid,
        sensitivity_mean,
        specificity_mean,
        bootstrap_n,
        sample_size,
        seed,
    })
}

/// Non-bootstrap exhaustive sweep over the full labeled set; the grid point
/// minimizing |sensitivity - specificity|. Used as the tuning oracle.
pub fn exhaustive_grid_optimum(labeled: &[(String, u32)], docs: &[TfVector]) -> f64 {
    let by_id: BTreeMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.email_id.as_str(), i))
        .collect();
    let n = labeled.len();
    let mut dup_hist = [0u64; GRID_LEN];
    let mut non_hist = [0u64; GRID_LEN];
    for a in 0..n {
        for b in (a + 1)..n {
            let s = cosine(&docs[by_id[labeled[a].0.as_str()]], &docs[by_id[labeled[b].0.as_str()]]);
            let bin = grid_bin(s);
            if labeled[a].1 == labeled[b].1 {
                dup_hist[bin] += 1;
            } else {
                non_hist[bin] += 1;
            }
        }
    }
    let dup_total: u64 = dup_hist.iter().sum();
    let non_total: u64 = non_hist.iter().sum();
    let grid = threshold_grid();
    let mut best = 0usize;
    let mut best_gap = f64::INFINITY;
    let mut dup_ge = 0u64;
    let mut non_ge = 0u64;
    let mut sens = [0.0f64; GRID_LEN];
    let mut spec = [0.0f64; GRID_LEN];
    for t in (0..GRID_LEN).rev() {
        dup_ge += dup_hist[t];
        non_ge += non_hist[t];
        sens[t] = if dup_total > 0 {
            dup_ge as f64 / dup_total as f64
        } else {
            0.0
        };
        spec[t] = if non_total > 0 {
            (non_total - non_ge) as f64 / non_total as f64
        } else {
            0.0
        };
    }
    for t in 0..GRID_LEN {
        let gap = (sens[t] - spec[t]).abs();
        if gap < best_gap || (gap == best_gap && t > best) {
            best_gap = gap;
            best = t;
        }
    }
    grid[best]
}

/// Pair-level sensitivity and specificity of `threshold` over the full
/// labeled set (no bootstrap).
pub fn pair_metrics_at(labeled: &[(String, u32)], docs: &[TfVector], threshold: f64) -> (f64, f64) {
    let by_id: BTreeMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.email_id.as_str(), i))
        .collect();
    let (mut tp, mut fng, mut tn, mut fp) = (0u64, 0u64, 0u64, 0u64);
    for a in 0..labeled.len() {
        for b in (a + 1)..labeled.len() {
            let s = cosine(&docs[by_id[labeled[a].0.as_str()]], &docs[by_id[labeled[b].0.as_str()]]);
            let predicted = s >= threshold;
            let actual = labeled[a].1 == labeled[b].1;
            match (actual, predicted) {
                (true, true) => tp += 1,
                (true, false) => fng += 1,
                (false, false) => tn += 1,
                (false, true) => fp += 1,
            }
        }
    }
    let sens = tp as f64 / (tp + fng).max(1) as f64;
    let spec = tn as f64 / (tn + fp).max(1) as f64;
    (sens, spec)
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // anchor to the smaller index so component roots are stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Connected components of the graph with edges `score >= threshold`.
///
/// Component ids are dense integers starting at 1, ordered by each
/// component's earliest member position in `m.ids`; callers wanting the
/// spec'd earliest-member-timestamp order pass ids in chronological order.
pub fn assign_duplicate_ids(
    m: &SimilarityMatrix,
    threshold: f64,
) -> Result<BTreeMap<String, u32>, DedupError> {
    if threshold < m.floor {
        return Err(DedupError::ThresholdBelowFloor {
            threshold,
            floor: m.floor,
        });
    }
    let mut uf = UnionFind::new(m.len());
    for (i, j, s) in &m.entries {
        if *s >= threshold {
            uf.union(*i, *j);
        }
    }
    let mut next_id = 0u32;
    let mut root_to_dense: BTreeMap<u32, u32> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for i in 0..m.len() {
        let root = uf.find(i as u32);
        let dense = *root_to_dense.entry(root).or_insert_with(|| {
            next_id += 1;
            next_id
        });
        out.insert(m.ids[i].clone(), dense);
    }
    Ok(out)
}

/// Campaign duration classes. Cutoffs: up to one day, up to 100 days,
/// beyond 100 days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationClass {
    #[serde(rename = "SINGLE-DAY")]
    SingleDay,
    #[serde(rename = "SHORT")]
    Short,
    #[serde(rename = "LONG")]
    Long,
}

impl DurationClass {
    pub fn of(duration_days: f64) -> Self {
        if duration_days <= 1.0 {
            DurationClass::SingleDay
        } else if duration_days <= 100.0 {
            DurationClass::Short
        } else {
            DurationClass::Long
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DurationClass::SingleDay => "SINGLE-DAY",
            DurationClass::Short => "SHORT",
            DurationClass::Long => "LONG",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignCluster {
    pub duplicate_id: u32,
    pub member_ids: Vec<String>,
    pub first_seen: Option<DateTime<Utc>>,
    pub last_seen: Option<DateTime<Utc>>,
    pub duration_days: f64,
    pub duration_class: DurationClass,
    pub samples: usize,
}

/// One cluster per duplicate id. Members without a date are excluded from
/// the duration window but still counted in `samples`.
pub fn campaigns(emails: &[Email]) -> Result<Vec<CampaignCluster>, DedupError> {
    let mut by_dup: BTreeMap<u32, Vec<&Email>> = BTreeMap::new();
    for e in emails {
        let id = e
            .duplicate_id
            .ok_or_else(|| DedupError::MissingDuplicateId(e.id.clone()))?;
        by_dup.entry(id).or_default().push(e);
    }
    Ok(by_dup
        .into_iter()
        .map(|(duplicate_id, members)| {
            let dates: Vec<DateTime<Utc>> = members.iter().filter_map(|e| e.date).collect();
            let first_seen = dates.iter().min().copied();
            let last_seen = dates.iter().max().copied();
            let duration_days = match (first_seen, last_seen) {
                (Some(a), Some(b)) => (b - a).num_seconds() as f64 / 86_400.0,
                _ => 0.0,
            };
            CampaignCluster {
                duplicate_id,
                member_ids: members.iter().map(|e| e.id.clone()).collect(),
                first_seen,
                last_seen,
                duration_days,
                duration_class: DurationClass::of(duration_days),
                samples: members.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{tf_vector, TokenDoc, Vocabulary};
    use chrono::TimeZone;

    fn vectors(token_sets: &[&[&str]]) -> Vec<TfVector> {
        let docs: Vec<TokenDoc> = token_sets
            .iter()
            .enumerate()
            .map(|(i, toks)| TokenDoc {
                email_id: format!("e{i}"),
                tokens: toks.iter().map(|s| s.to_string()).collect(),
            })
            .collect();
        let vocab = Vocabulary::build(docs.iter());
        docs.iter().map(|d| tf_vector(d, &vocab, true)).collect()
    }

    #[test]
    fn identical_docs_have_off_diagonal_one() {
        let vs = vectors(&[&["a", "b", "c"], &["a", "b", "c"]]);
        let m = similarity_matrix(&vs, DEFAULT_STORAGE_FLOOR);
        assert!((m.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((m.get(1, 0) - 1.0).abs() < 1e-12);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn disjoint_docs_give_identity_like_matrix() {
        let vs = vectors(&[&["a"], &["b"], &["c"], &["d"]]);
        let m = similarity_matrix(&vs, DEFAULT_STORAGE_FLOOR);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(m.get(i, j), expect);
            }
        }
    }

    #[test]
    fn sparse_matrix_matches_dense_brute_force() {
        // 10-doc fixture with overlapping vocab; floor 0 keeps everything.
        let sets: Vec<Vec<&str>> = vec![
            vec!["a", "b", "c"],
            vec!["a", "b", "d"],
            vec!["a", "e"],
            vec!["f", "g", "h"],
            vec!["f", "g", "h", "i"],
            vec!["j"],
            vec!["a", "b", "c", "c"],
            vec!["k", "l"],
            vec!["k", "l", "a"],
            vec!["m", "n", "o", "p"],
        ];
        let refs: Vec<&[&str]> = sets.iter().map(|v| v.as_slice()).collect();
        let vs = vectors(&refs);
        let m = similarity_matrix(&vs, 0.0);
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let dense = if i == j {
                    1.0
                } else {
                    cosine(&vs[i], &vs[j])
                };
                assert!(
                    (m.get(i, j) - dense).abs() < 1e-12,
                    "mismatch at ({i},{j})"
                );
            }
        }
        // symmetry within 1e-12
        for (i, j, s) in &m.entries {
            assert!((s - m.get(*j as usize, *i as usize)).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_merges_into_one_component() {
        // a~b and b~c above threshold, a~c below: connected components put
        // all three together.
        let vs = vectors(&[
            &["x", "x", "x", "y"],
            &["x", "x", "y", "y"],
            &["x", "y", "y", "y"],
        ]);
        let m = similarity_matrix(&vs, 0.0);
        let ab = m.get(0, 1);
        let ac = m.get(0, 2);
        assert!(ab > ac);
        let threshold = (ab + ac) / 2.0;
        let assign = assign_duplicate_ids(&m, threshold).unwrap();
        assert!(m.get(0, 2) < threshold);
        assert_eq!(assign["e0"], assign["e1"]);
        assert_eq!(assign["e1"], assign["e2"]);
    }

    #[test]
    fn threshold_above_one_keeps_only_exact_direction_duplicates() {
        let vs = vectors(&[&["a", "b"], &["a", "b", "a", "b"], &["a", "c"]]);
        let m = similarity_matrix(&vs, 0.0);
        let assign = assign_duplicate_ids(&m, 1.0).unwrap();
        assert_eq!(assign["e0"], assign["e1"]); // same direction, cosine 1
        assert_ne!(assign["e0"], assign["e2"]);
    }

    #[test]
    fn threshold_below_floor_is_rejected() {
        let vs = vectors(&[&["a"], &["b"]]);
        let m = similarity_matrix(&vs, 0.05);
        assert!(matches!(
            assign_duplicate_ids(&m, 0.01),
            Err(DedupError::ThresholdBelowFloor { .. })
        ));
    }

    #[test]
    fn components_partition_ids_and_are_ordered_by_first_member() {
        let vs = vectors(&[&["a", "b"], &["z", "w"], &["a", "b", "b"], &["q"]]);
        let m = similarity_matrix(&vs, 0.0);
        let assign = assign_duplicate_ids(&m, 0.9).unwrap();
        assert_eq!(assign.len(), 4);
        assert_eq!(assign["e0"], 1); // first component seen
        assert_eq!(assign["e2"], 1);
        assert_eq!(assign["e1"], 2);
        assert_eq!(assign["e3"], 3);
    }

    #[test]
    fn raising_threshold_never_merges_separate_components() {
        let vs = vectors(&[
            &["a", "b", "c"],
            &["a", "b", "d"],
            &["e", "f"],
            &["e", "f", "g"],
            &["h"],
        ]);
        let m = similarity_matrix(&vs, 0.0);
        let lo = assign_duplicate_ids(&m, 0.3).unwrap();
        let hi = assign_duplicate_ids(&m, 0.8).unwrap();
        // same component at hi => same component at lo
        for a in m.ids.iter() {
            for b in m.ids.iter() {
                if hi[a] == hi[b] {
                    assert_eq!(lo[a], lo[b], "{a} {b} merged at hi but not lo");
                }
            }
        }
    }

    fn email_with(id: &str, dup: u32, ts: Option<&str>) -> Email {
        Email {
            id: id.into(),
            from_addr: "a@x.com".into(),
            from_domain: "x.com".into(),
            to_addr: "b@y.com".into(),
            date: ts.map(|t| {
                chrono::DateTime::parse_from_rfc3339(t)
                    .unwrap()
                    .with_timezone(&Utc)
            }),
            subject: String::new(),
            body_text: "body".into(),
            body_length: 4,
            suspicious: true,
            duplicate_id: Some(dup),
        }
    }

    #[test]
    fn campaign_duration_classes_match_cutoffs() {
        let t0 = "2018-02-01T09:00:00Z";
        let mk = |days: f64| {
            let start = chrono::DateTime::parse_from_rfc3339(t0)
                .unwrap()
                .with_timezone(&Utc);
            let end = start + chrono::Duration::seconds((days * 86_400.0) as i64);
            (start, end)
        };
        for (days, expect) in [
            (0.0, DurationClass::SingleDay),
            (52.1, DurationClass::Short),
            (150.6, DurationClass::Long),
        ] {
            let (start, end) = mk(days);
            let emails = vec![
                email_with("a", 1, Some(&start.to_rfc3339())),
                email_with("b", 1, Some(&end.to_rfc3339())),
            ];
            let cs = campaigns(&emails).unwrap();
            assert_eq!(cs.len(), 1);
            assert_eq!(cs[0].duration_class, expect, "days={days}");
            assert!((cs[0].duration_days - days).abs() < 1e-4);
            assert_eq!(cs[0].samples, 2);
        }
    }

    #[test]
    fn members_without_dates_count_in_samples_only() {
        let emails = vec![
            email_with("a", 7, Some("2018-03-01T00:00:00Z")),
            email_with("b", 7, None),
            email_with("c", 7, Some("2018-03-02T00:00:00Z")),
        ];
        let cs = campaigns(&emails).unwrap();
        assert_eq!(cs[0].samples, 3);
        assert!((cs[0].duration_days - 1.0).abs() < 1e-9);
        assert_eq!(cs[0].duration_class, DurationClass::SingleDay);
        assert_eq!(
            cs[0].first_seen.unwrap(),
            Utc.with_ymd_and_hms(2018, 3, 1, 0, 0, 0).unwrap()
        );
    }

    fn separable_family(n_groups: usize, per_group: usize) -> (Vec<(String, u32)>, Vec<TfVector>) {
        // High intra-group similarity, near-zero inter-group.
        let mut docs = Vec::new();
        for g in 0..n_groups {
            for k in 0..per_group {
                let mut tokens: Vec<String> =
                    (0..20).map(|w| format!("g{g}w{w}")).collect();
                tokens.push(format!("noise{k}"));
                docs.push(TokenDoc {
                    email_id: format!("g{g}k{k}"),
                    tokens,
                });
            }
        }
        let vocab = Vocabulary::build(docs.iter());
        let vecs: Vec<TfVector> = docs.iter().map(|d| tf_vector(d, &vocab, true)).collect();
        let labeled = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.email_id.clone(), (i / per_group) as u32))
            .collect();
        (labeled, vecs)
    }

    #[test]
    fn tuning_on_separable_set_lands_between_the_bands() {
        let (labeled, vecs) = separable_family(6, 5);
        // Band edges measured from the data itself.
        let mut max_inter = 0.0f64;
        let mut min_intra = 1.0f64;
        for a in 0..labeled.len() {
            for b in (a + 1)..labeled.len() {
                let s = cosine(&vecs[a], &vecs[b]);
                if labeled[a].1 == labeled[b].1 {
                    min_intra = min_intra.min(s);
                } else {
                    max_inter = max_inter.max(s);
                }
            }
        }
        assert!(max_inter <= 0.3 && min_intra >= 0.95, "fixture not separable");
        let tuning = tune_threshold(&labeled, &vecs, 300, 30, 7).unwrap();
        assert!(
            tuning.chosen_threshold > max_inter && tuning.chosen_threshold < min_intra,
            "threshold {} outside ({max_inter}, {min_intra})",
            tuning.chosen_threshold
        );
        let t_idx = (tuning.chosen_threshold * 100.0).round() as usize;
        assert!((tuning.sensitivity_mean[t_idx] - 1.0).abs() < 1e-9);
        assert!((tuning.specificity_mean[t_idx] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tuning_is_bit_reproducible_under_fixed_seed() {
        let (labeled, vecs) = separable_family(4, 4);
        let a = tune_threshold(&labeled, &vecs, 200, 16, 42).unwrap();
        let b = tune_threshold(&labeled, &vecs, 200, 16, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_labels_cannot_be_tuned() {
        let (mut labeled, vecs) = separable_family(2, 3);
        for (_, g) in labeled.iter_mut() {
            *g = 0;
        }
        assert!(matches!(
            tune_threshold(&labeled, &vecs, 10, 6, 1),
            Err(DedupError::SingleClass)
        ));
    }

    #[test]
    fn sensitivity_non_increasing_specificity_non_decreasing_in_threshold() {
        let (labeled, vecs) = separable_family(5, 4);
        let tuning = tune_threshold(&labeled, &vecs, 100, 20, 3).unwrap();
        for t in 1..tuning.threshold_grid.len() {
            assert!(tuning.sensitivity_mean[t] <= tuning.sensitivity_mean[t - 1] + 1e-12);
            assert!(tuning.specificity_mean[t] + 1e-12 >= tuning.specificity_mean[t - 1]);
        }
    }
}

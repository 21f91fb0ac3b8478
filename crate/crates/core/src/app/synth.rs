//! Synthetic corpus generation.
//!
//! Produces a full desk-scale input set for the pipeline: raw email JSONL
//! (with forwarded wrappers, SMS-like strays, and competitor reports to
//! exercise sanitization), training labels, a redirect fixture whose
//! landing URLs carry Poisson click counts drawn from a configured true
//! model `exp(alpha + beta' x)`, and a ground-truth file recording every
//! latent variable. Also provides the document-level corpus generators used
//! to benchmark the topic model on its own.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;
use crate::textproc::TokenDoc;

/// Consonant base-10 encoding: generated vocabulary words stay pure-alpha
/// and never end in a suffix a stemmer would strip.
fn alpha_code(mut n: usize) -> String {
    const DIGITS: [char; 10] = ['b', 'c', 'd', 'f', 'g', 'h', 'j', 'k', 'l', 'm'];
    let mut out = String::new();
    loop {
        out.insert(0, DIGITS[n % 10]);
        n /= 10;
        if n == 0 {
            break;
        }
    }
    out
}

fn label_prefix(label: &str) -> String {
    let clean: String = label
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .flat_map(|c| c.to_lowercase())
        .collect();
    format!("{}x", &clean[..clean.len().min(6)])
}

// ---------------------------------------------------------------------------
// Document-level corpora for topic-model benchmarks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DocCorpusSpec {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub labels: Vec<String>,
    /// Probability that a token draws from its label's own block rather
    /// than the global background; 1.0 plus single labels = separable.
    pub own_mass: f64,
    pub doc_len: (usize, usize),
    pub max_labels_per_doc: usize,
}

impl DocCorpusSpec {
    pub fn separable(n_docs: usize, vocab_size: usize, labels: Vec<String>) -> Self {
        DocCorpusSpec {
            n_docs,
            vocab_size,
            labels,
            own_mass: 1.0,
            doc_len: (30, 80),
            max_labels_per_doc: 1,
        }
    }

    pub fn mixed(n_docs: usize, vocab_size: usize, labels: Vec<String>) -> Self {
        DocCorpusSpec {
            n_docs,
            vocab_size,
            labels,
            own_mass: 0.7,
            doc_len: (40, 100),
            max_labels_per_doc: 2,
        }
    }
}

/// Draw a labeled document corpus from per-label word distributions.
pub fn synth_label_docs(
    spec: &DocCorpusSpec,
    seed: u64,
) -> (Vec<TokenDoc>, BTreeMap<String, BTreeSet<String>>) {
    let k = spec.labels.len();
    let vocab: Vec<String> = (0..spec.vocab_size)
        .map(|i| format!("w{}", alpha_code(i)))
        .collect();
    let block = spec.vocab_size / k;
    let mut rng = stream_rng(seed, 0);
    let mut docs = Vec::with_capacity(spec.n_docs);
    let mut labels = BTreeMap::new();

    for d in 0..spec.n_docs {
        let n_labels = if spec.max_labels_per_doc <= 1 {
            1
        } else {
            rng.random_range(1..=spec.max_labels_per_doc)
        };
        let mut chosen: Vec<usize> = if d < k {
            vec![d] // force every label to appear
        } else {
            let mut all: Vec<usize> = (0..k).collect();
            all.shuffle(&mut rng);
            all.truncate(n_labels);
            all
        };
        chosen.sort_unstable();
        chosen.dedup();

        let len = rng.random_range(spec.doc_len.0..=spec.doc_len.1);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                let label = chosen[rng.random_range(0..chosen.len())];
                let idx = if rng.random::<f64>() < spec.own_mass {
                    label * block + rng.random_range(0..block)
                } else {
                    rng.random_range(0..spec.vocab_size)
                };
                vocab[idx].clone()
            })
            .collect();

        let id = format!("doc{d:05}");
        labels.insert(
            id.clone(),
            chosen
                .iter()
                .map(|l| spec.labels[*l].clone())
                .collect::<BTreeSet<_>>(),
        );
        docs.push(TokenDoc {
            email_id: id,
            tokens,
        });
    }
    (docs, labels)
}

// ---------------------------------------------------------------------------
// Full email corpus
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_emails: usize,
    pub n_families: usize,
    /// Per-token probability of replacement by a background word within a
    /// duplicate family.
    pub token_noise: f64,
    pub labels: Vec<String>,
    pub vocab_per_label: usize,
    pub background_vocab: usize,
    /// Mean trigger intensity per label when the label is present.
    pub trigger_mean: Vec<f64>,
    /// Probability a family exploits each label.
    pub label_presence_p: Vec<f64>,
    pub true_alpha: f64,
    /// One slope per label plus a final slope for the spoof distance.
    pub true_beta: Vec<f64>,
    pub spoof_dist_max: u32,
    /// Fraction of phishing emails whose landing URL has recorded clicks.
    pub clicked_fraction: f64,
    /// Fraction of phishing emails included in labels.jsonl.
    pub labeled_fraction: f64,
    pub forwarded_fraction: f64,
    /// Extra stray records exercising sanitization, as fractions of
    /// `n_emails`.
    pub sms_fraction: f64,
    pub competitor_fraction: f64,
    pub org_name: String,
    pub org_domain: String,
    pub competitors: Vec<String>,
    pub start_ts: i64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_emails: 1000,
            n_families: 60,
            token_noise: 0.05,
            labels: crate::llda::default_labels(),
            vocab_per_label: 40,
            background_vocab: 150,
            trigger_mean: vec![3.0, 13.0, 2.0, 5.0, 1.0, 20.0],
            label_presence_p: vec![0.5, 0.8, 0.3, 0.5, 0.2, 0.85],
            true_alpha: 3.0,
            true_beta: vec![-0.02, 0.02, 0.0, 0.01, 0.0, 0.02, -0.1],
            spoof_dist_max: 8,
            clicked_fraction: 0.12,
            labeled_fraction: 0.12,
            forwarded_fraction: 0.5,
            sms_fraction: 0.05,
            competitor_fraction: 0.05,
            org_name: "examplebank".to_string(),
            org_domain: "examplebank.com".to_string(),
            competitors: vec!["otherbank".to_string(), "rivalbank".to_string()],
            start_ts: 1_517_475_600, // 2018-02-01T09:00:00Z
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmailTruth {
    pub id: String,
    pub family: u32,
    pub labels: Vec<String>,
    pub trigger_counts: Vec<u32>,
    pub spoof_dist: u32,
    pub rate: f64,
    pub clicked: bool,
    pub landing: String,
    pub clicks: u64,
    pub date_ts: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_alpha: f64,
    pub true_beta: BTreeMap<String, f64>,
    pub labels: Vec<String>,
    pub n_families: usize,
    pub emails: Vec<EmailTruth>,
}

#[derive(Debug)]
pub struct SynthOutputs {
    pub dir: PathBuf,
    pub emails_path: PathBuf,
    pub labels_path: PathBuf,
    pub clicks_path: PathBuf,
    pub redirects_path: PathBuf,
    pub ground_truth_path: PathBuf,
    pub competitors_path: PathBuf,
    pub config_path: PathBuf,
    pub truth: GroundTruth,
}

struct Family {
    present: Vec<usize>,
    template: Vec<String>,
    from_domain: String,
    spoof_dist: u32,
    start: i64,
    span_secs: i64,
    members: Vec<usize>, // email indices
}

fn mutate_name(org: &str, edits: u32, rng: &mut impl Rng) -> String {
    const SUBS: [char; 10] = ['0', '1', 'q', 'z', 'x', 'v', 'w', 'y', 'u', 'o'];
    let mut chars: Vec<char> = org.chars().collect();
    for _ in 0..edits {
        match rng.random_range(0..3) {
            0 if !chars.is_empty() => {
                let pos = rng.random_range(0..chars.len());
                let mut c = SUBS[rng.random_range(0..SUBS.len())];
                if chars[pos] == c {
                    c = if c == 'z' { 'q' } else { 'z' };
                }
                chars[pos] = c;
            }
            1 => {
                let pos = rng.random_range(0..=chars.len());
                chars.insert(pos, SUBS[rng.random_range(0..SUBS.len())]);
            }
            _ if chars.len() > 3 => {
                let pos = rng.random_range(0..chars.len());
                chars.remove(pos);
            }
            _ => {
                chars.push(SUBS[rng.random_range(0..SUBS.len())]);
            }
        }
    }
    chars.into_iter().collect()
}

/// Generate the corpus and write every artifact under `dir`. Deterministic
/// for a fixed `(spec, seed)`.
pub fn synth_corpus(spec: &SynthSpec, seed: u64, dir: &Path) -> std::io::Result<SynthOutputs> {
    std::fs::create_dir_all(dir)?;
    let k = spec.labels.len();
    assert_eq!(spec.trigger_mean.len(), k, "trigger_mean length");
    assert_eq!(spec.label_presence_p.len(), k, "label_presence_p length");
    assert_eq!(spec.true_beta.len(), k + 1, "true_beta length (labels + spoof)");

    let mut rng = stream_rng(seed, 0);

    // vocabularies
    let label_vocab: Vec<Vec<String>> = spec
        .labels
        .iter()
        .map(|l| {
            let prefix = label_prefix(l);
            (0..spec.vocab_per_label)
                .map(|i| format!("{prefix}{}", alpha_code(i)))
                .collect()
        })
        .collect();
    let background: Vec<String> = (0..spec.background_vocab)
        .map(|i| format!("fill{}", alpha_code(i)))
        .collect();

    // families
    let mut families: Vec<Family> = Vec::with_capacity(spec.n_families);
    for f in 0..spec.n_families {
        let mut present: Vec<usize> = (0..k)
            .filter(|l| rng.random::<f64>() < spec.label_presence_p[*l])
            .collect();
        if f < k {
            // guarantee every label has at least one family
            if !present.contains(&f) {
                present.push(f);
                present.sort_unstable();
            }
        }
        if present.is_empty() {
            present.push(rng.random_range(0..k));
        }
        let intensities: Vec<u32> = (0..k)
            .map(|l| {
                if present.contains(&l) {
                    1 + Poisson::new(spec.trigger_mean[l].max(0.1))
                        .unwrap()
                        .sample(&mut rng) as u32
                } else {
                    0
                }
            })
            .collect();
        let mut template = Vec::new();
        for l in 0..k {
            for _ in 0..intensities[l] {
                template.push(label_vocab[l][rng.random_range(0..spec.vocab_per_label)].clone());
            }
        }
        let n_background = rng.random_range(35..60);
        for _ in 0..n_background {
            template.push(background[rng.random_range(0..spec.background_vocab)].clone());
        }
        template.shuffle(&mut rng);

        let spoof_target = rng.random_range(0..=spec.spoof_dist_max);
        let mutated = mutate_name(&spec.org_name, spoof_target, &mut rng);
        let from_domain = format!("{mutated}.com");
        let spoof_dist =
            crate::urlintel::spoof_distance(&from_domain, &spec.org_name) as u32;

        // duration class mix: ~30% single-day, ~10% short, ~60% long
        let roll: f64 = rng.random();
        let span_days: f64 = if roll < 0.3 {
            rng.random_range(0.0..1.0)
        } else if roll < 0.4 {
            rng.random_range(2.0..100.0)
        } else {
            rng.random_range(101.0..200.0)
        };
        let start = spec.start_ts + rng.random_range(0..90 * 86_400);
        families.push(Family {
            present,
            template,
            from_domain,
            spoof_dist,
            start,
            span_secs: (span_days * 86_400.0) as i64,
            members: Vec::new(),
        });
    }

    // assign emails to families (balanced with jitter)
    let mut family_of = Vec::with_capacity(spec.n_emails);
    for e in 0..spec.n_emails {
        family_of.push(e % spec.n_families);
    }
    family_of.shuffle(&mut rng);
    for (e, f) in family_of.iter().enumerate() {
        families[*f].members.push(e);
    }

    let mut truth_emails: Vec<Option<EmailTruth>> = vec![None; spec.n_emails];
    let mut raw_lines: Vec<(String, String, i64)> = Vec::new(); // id, raw, ts
    let mut redirect_lines = Vec::new();
    let mut click_rows: Vec<(String, u64, i64)> = Vec::new();
    let beta_spoof = spec.true_beta[k];

    for (fidx, family) in families.iter().enumerate() {
        for &e in &family.members {
            let id = format!("m{e:06}");
            // member body: template with token noise plus a unique salt
            let mut tokens: Vec<String> = family
                .template
                .iter()
                .map(|t| {
                    if rng.random::<f64>() < spec.token_noise {
                        background[rng.random_range(0..spec.background_vocab)].clone()
                    } else {
                        t.clone()
                    }
                })
                .collect();
            tokens.push(format!("naam{}", alpha_code(e)));

            let trigger_counts: Vec<u32> = (0..k)
                .map(|l| {
                    let prefix = label_prefix(&spec.labels[l]);
                    tokens.iter().filter(|t| t.starts_with(&prefix)).count() as u32
                })
                .collect();

            let date_ts = family.start
                + if family.span_secs > 0 {
                    rng.random_range(0..=family.span_secs)
                } else {
                    0
                };
            let date = Utc.timestamp_opt(date_ts, 0).unwrap();

            let susp_url = format!("http://phish-{fidx}.badsite.example/go/{id}");
            let mid_url = format!("http://hop-{fidx}.redirector.example/r/{id}");
            let landing = format!("http://landing-{fidx}.badsite.example/page/{id}");
            redirect_lines.push(format!("{susp_url} -> {mid_url}"));
            redirect_lines.push(format!("{mid_url} -> {landing}"));

            let eta: f64 = spec.true_alpha
                + trigger_counts
                    .iter()
                    .enumerate()
                    .map(|(l, c)| spec.true_beta[l] * *c as f64)
                    .sum::<f64>()
                + beta_spoof * family.spoof_dist as f64;
            let rate = eta.clamp(-20.0, 20.0).exp();
            let clicked = rng.random::<f64>() < spec.clicked_fraction;
            let clicks = if clicked {
                Poisson::new(rate.max(1e-9)).unwrap().sample(&mut rng) as u64
            } else {
                0
            };
            if clicked {
                click_rows.push((landing.clone(), clicks, date_ts + 3600));
            }

            let body = format!(
                "Geachte klant,\n\n{}\n\nKlik hier: {susp_url}\n\nMet vriendelijke groet,\n{} Team",
                tokens.join(" "),
                spec.org_name
            );
            let subject = format!("Belangrijk bericht {fidx}");
            let original = format!(
                "From: {} Security <security@{}>\r\nTo: klant{}@mail.example\r\nDate: {}\r\nSubject: {}\r\n\r\n{}",
                spec.org_name,
                family.from_domain,
                alpha_code(e),
                date.to_rfc2822(),
                subject,
                body
            );
            let raw = if rng.random::<f64>() < spec.forwarded_fraction {
                let fwd_date = Utc.timestamp_opt(date_ts + 7200, 0).unwrap();
                format!(
                    "From: klant{}@mail.example\r\nTo: phishing@{}\r\nDate: {}\r\nSubject: FW: {}\r\n\r\nZie onderstaande mail.\r\n\r\n---------- Forwarded message ----------\r\n{}",
                    alpha_code(e),
                    spec.org_domain,
                    fwd_date.to_rfc2822(),
                    subject,
                    original
                )
            } else {
                original
            };

            raw_lines.push((id.clone(), raw, date_ts + 7200));
            truth_emails[e] = Some(EmailTruth {
                id,
                family: fidx as u32 + 1,
                labels: family
                    .present
                    .iter()
                    .map(|l| spec.labels[*l].clone())
                    .collect(),
                trigger_counts,
                spoof_dist: family.spoof_dist,
                rate,
                clicked,
                landing,
                clicks,
                date_ts,
            });
        }
    }

    // stray records exercising sanitization
    let n_sms = (spec.n_emails as f64 * spec.sms_fraction) as usize;
    let n_comp = (spec.n_emails as f64 * spec.competitor_fraction) as usize;
    for i in 0..n_sms {
        let ts = spec.start_ts + rng.random_range(0..200 * 86_400);
        let date = Utc.timestamp_opt(ts, 0).unwrap();
        let raw = format!(
            "From: sms-gateway@telecom.example\r\nTo: phishing@{}\r\nDate: {}\r\nSubject: FW: SMS\r\n\r\nUw code is {}. Niet delen.",
            spec.org_domain,
            date.to_rfc2822(),
            1000 + i
        );
        raw_lines.push((format!("sms{i:04}"), raw, ts));
    }
    for i in 0..n_comp {
        let ts = spec.start_ts + rng.random_range(0..200 * 86_400);
        let date = Utc.timestamp_opt(ts, 0).unwrap();
        let competitor = &spec.competitors[i % spec.competitors.len()];
        let filler: Vec<String> = (0..60)
            .map(|_| background[rng.random_range(0..spec.background_vocab)].clone())
            .collect();
        let raw = format!(
            "From: info@{competitor}.example\r\nTo: phishing@{}\r\nDate: {}\r\nSubject: {competitor} melding\r\n\r\nGeachte klant van {competitor}, {} http://fake-{competitor}.example/x",
            spec.org_domain,
            date.to_rfc2822(),
            filler.join(" ")
        );
        raw_lines.push((format!("comp{i:04}"), raw, ts));
    }

    // labeled training subset covering every label
    let truth: Vec<EmailTruth> = truth_emails.into_iter().flatten().collect();
    let mut labeled_ids: BTreeSet<String> = BTreeSet::new();
    for l in spec.labels.iter() {
        if let Some(t) = truth.iter().find(|t| t.labels.contains(l)) {
            labeled_ids.insert(t.id.clone());
        }
    }
    let want = ((spec.n_emails as f64) * spec.labeled_fraction) as usize;
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.shuffle(&mut rng);
    for e in order {
        if labeled_ids.len() >= want.max(spec.labels.len()) {
            break;
        }
        labeled_ids.insert(truth[e].id.clone());
    }

    // ----- write artifacts -----
    let emails_path = dir.join("emails.jsonl");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&emails_path)?);
        for (id, raw, ts) in &raw_lines {
            let line = serde_json::json!({"id": id, "raw": raw, "received_at": ts});
            writeln!(f, "{line}")?;
        }
    }

    let labels_path = dir.join("labels.jsonl");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&labels_path)?);
        for t in &truth {
            if labeled_ids.contains(&t.id) {
                let line = serde_json::json!({"email_id": t.id, "labels": t.labels});
                writeln!(f, "{line}")?;
            }
        }
    }

    let clicks_path = dir.join("clicks.csv");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&clicks_path)?);
        writeln!(f, "landing_url,clicks,observed_at")?;
        for (landing, clicks, ts) in &click_rows {
            let when = Utc.timestamp_opt(*ts, 0).unwrap().to_rfc3339();
            writeln!(f, "{landing},{clicks},{when}")?;
        }
    }

    let redirects_path = dir.join("redirects.fixture");
    std::fs::write(&redirects_path, redirect_lines.join("\n") + "\n")?;

    let competitors_path = dir.join("competitors.txt");
    std::fs::write(&competitors_path, spec.competitors.join("\n") + "\n")?;

    let truth = GroundTruth {
        true_alpha: spec.true_alpha,
        true_beta: spec
            .labels
            .iter()
            .cloned()
            .chain(std::iter::once("SpoofDist".to_string()))
            .zip(spec.true_beta.iter().copied())
            .collect(),
        labels: spec.labels.clone(),
        n_families: spec.n_families,
        emails: truth,
    };
    let ground_truth_path = dir.join("ground_truth.json");
    std::fs::write(&ground_truth_path, serde_json::to_string_pretty(&truth)?)?;

    // ready-to-run pipeline config
    let config_path = dir.join("pipeline.cfg");
    let config_text = format!(
        "version = 1\n\
         input = emails.jsonl\n\
         format = jsonl\n\
         out_dir = out\n\
         org_name = {}\n\
         org_domains = {}\n\
         competitors = competitors.txt\n\
         stemmer = none\n\
         dedup_threshold = 0.8\n\
         labels_file = labels.jsonl\n\
         llda_train_iterations = 500\n\
         llda_infer_iterations = 150\n\
         llda_burn_in = 400\n\
         clicks_file = clicks.csv\n\
         redirects_file = redirects.fixture\n\
         model = PM1\n\
         bootstrap_b = 1000\n\
         predict_draws = 10000\n\
         seed_dedup = {seed}\n\
         seed_train = {seed}\n\
         seed_infer = {seed}\n\
         seed_resolver = {seed}\n\
         seed_bootstrap = {seed}\n\
         seed_predict = {seed}\n",
        spec.org_name, spec.org_domain,
    );
    std::fs::write(&config_path, config_text)?;

    Ok(SynthOutputs {
        dir: dir.to_path_buf(),
        emails_path,
        labels_path,
        clicks_path,
        redirects_path,
        ground_truth_path,
        competitors_path,
        config_path,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{cosine, tf_vector, Vocabulary};

    #[test]
    fn ground_truth_passes_through_the_generating_model() {
        let spec = SynthSpec {
            n_emails: 40,
            n_families: 8,
            ..SynthSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let out = synth_corpus(&spec, 5, dir.path()).unwrap();
        assert_eq!(out.truth.true_beta["Scarcity"], 0.02);
        assert_eq!(out.truth.true_alpha, 3.0);
        assert_eq!(out.truth.emails.len(), 40);
        for t in &out.truth.emails {
            let eta: f64 = spec.true_alpha
                + t.trigger_counts
                    .iter()
                    .enumerate()
                    .map(|(l, c)| spec.true_beta[l] * *c as f64)
                    .sum::<f64>()
                + spec.true_beta[6] * t.spoof_dist as f64;
            assert!((t.rate - eta.exp()).abs() < 1e-9 * t.rate.max(1.0));
        }
        assert!(out.emails_path.exists());
        assert!(out.config_path.exists());
    }

    #[test]
    fn families_are_more_similar_inside_than_across() {
        let spec = SynthSpec {
            n_emails: 60,
            n_families: 12,
            token_noise: 0.05,
            ..SynthSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let out = synth_corpus(&spec, 9, dir.path()).unwrap();

        // rebuild member token lists from the ground truth via the raw file
        let text = std::fs::read_to_string(&out.emails_path).unwrap();
        let mut docs = Vec::new();
        let tok = crate::textproc::Tokenizer::new(
            crate::textproc::TextConfig::default().with_stemmer("none"),
        )
        .unwrap();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let id = v["id"].as_str().unwrap().to_string();
            if !id.starts_with('m') {
                continue;
            }
            let raw = v["raw"].as_str().unwrap();
            docs.push(tok.clean_and_tokenize(&id, raw));
        }
        let vocab = Vocabulary::build(docs.iter());
        let vectors: Vec<_> = docs.iter().map(|d| tf_vector(d, &vocab, true)).collect();
        let family_of: BTreeMap<&str, u32> = out
            .truth
            .emails
            .iter()
            .map(|t| (t.id.as_str(), t.family))
            .collect();
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                let s = cosine(&vectors[i], &vectors[j]);
                if family_of[vectors[i].email_id.as_str()]
                    == family_of[vectors[j].email_id.as_str()]
                {
                    intra.push(s);
                } else {
                    inter.push(s);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&intra) > mean(&inter) + 0.2,
            "intra {} vs inter {}",
            mean(&intra),
            mean(&inter)
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec {
            n_emails: 30,
            n_families: 6,
            ..SynthSpec::default()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        synth_corpus(&spec, 77, d1.path()).unwrap();
        synth_corpus(&spec, 77, d2.path()).unwrap();
        for name in ["emails.jsonl", "labels.jsonl", "clicks.csv", "redirects.fixture"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn separable_docs_have_disjoint_blocks() {
        let spec = DocCorpusSpec::separable(50, 120, crate::llda::default_labels());
        let (docs, labels) = synth_label_docs(&spec, 3);
        assert_eq!(docs.len(), 50);
        for doc in &docs {
            let ls = &labels[&doc.email_id];
            assert_eq!(ls.len(), 1);
        }
        // all six labels appear
        let used: BTreeSet<&String> = labels.values().flatten().collect();
        assert_eq!(used.len(), 6);
    }
}

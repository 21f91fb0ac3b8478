//! End-to-end pipeline: ingest, sanitize, dedup, classify, URL intel,
//! fit/bootstrap, predict, rank, report.
//!
//! Every intermediate artifact is persisted under the configured output
//! directory with a stage-numbered name. A stage failure halts the run with
//! the stage name; artifacts written by earlier stages stay on disk. Given
//! identical inputs and seeds, two runs produce byte-identical artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::PipelineConfig;
use super::report::{report_stats, write_report_csvs, ReportBundle};
use crate::corpus::{
    ingest, recover_original_headers, sanitize, Email, HeaderLexicon, IngestFormat,
    SanitizationReport, SanitizeConfig,
};
use crate::dedup::{
    assign_duplicate_ids, campaigns, similarity_matrix, tune_threshold, CampaignCluster,
};
use crate::econometrics::{
    bootstrap_fit, build_design, fit_poisson, predict_clicks, stepwise, triage_rank,
    PredictionModel, TriageScore, STEPWISE_ORDER,
};
use crate::llda::{
    apply_presence_heuristic, infer_prepared, train, CognitiveProfile, LldaConfig,
};
use crate::textproc::{tf_vector, TextConfig, TokenDoc, Tokenizer, Vocabulary};
use crate::urlintel::{
    extract_and_flag, match_clicks, read_clicks_csv, resolve_redirects, spoof_distance,
    FixtureResolver, RedirectRecord, SuspiciousUrl,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage '{stage}' failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub ingested: usize,
    pub ingest_skipped: usize,
    pub unparseable: usize,
    pub sanitization: SanitizationReport,
    pub chosen_threshold: f64,
    pub n_campaigns: usize,
    pub n_suspicious: usize,
    pub n_clicked: usize,
    pub design_rows: usize,
    pub fit_converged: bool,
    pub queue_len: usize,
    pub stepwise_note: Option<String>,
    pub fit_note: Option<String>,
}

#[derive(Debug)]
pub struct PipelineOutputs {
    pub queue: Vec<TriageScore>,
    pub report: ReportBundle,
    pub summary: PipelineSummary,
}

/// Redirect resolution artifact row: the email association plus the record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmailRedirect {
    pub email_id: String,
    pub suspicious_url: String,
    pub landing_urls: Vec<String>,
    pub visits: u32,
}

#[derive(Debug, Deserialize)]
struct LabelsLine {
    email_id: String,
    labels: Vec<String>,
}

pub fn read_labels_jsonl(
    path: &Path,
) -> Result<BTreeMap<String, BTreeSet<String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LabelsLine = serde_json::from_str(line)
            .map_err(|e| format!("labels line {}: {e}", lineno + 1))?;
        out.insert(parsed.email_id, parsed.labels.into_iter().collect());
    }
    Ok(out)
}

fn read_lines_set(path: &Path) -> std::io::Result<BTreeSet<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect())
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T, stage: &'static str) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(stage_err(stage))?;
    std::fs::write(path, text).map_err(stage_err(stage))
}

fn write_corpus_jsonl(path: &PathBuf, emails: &[Email], stage: &'static str) -> Result<(), PipelineError> {
    let mut f =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(stage_err(stage))?);
    for e in emails {
        let line = serde_json::to_string(e).map_err(stage_err(stage))?;
        writeln!(f, "{line}").map_err(stage_err(stage))?;
    }
    Ok(())
}

/// Run every stage. Returns the ranked queue, the report bundle, and the
/// run summary; persists all artifacts under `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutputs, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(stage_err("setup"))?;
    pool.install(|| run_pipeline_inner(cfg))
}

fn run_pipeline_inner(cfg: &PipelineConfig) -> Result<PipelineOutputs, PipelineError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(stage_err("setup"))?;
    let out = |name: &str| cfg.out_dir.join(name);
    let mut summary = PipelineSummary::default();

    // -- ingest + header recovery ------------------------------------------
    let format: IngestFormat = cfg.format.parse().map_err(stage_err("ingest"))?;
    let (raw, ingest_report) = ingest(&cfg.input, format).map_err(stage_err("ingest"))?;
    summary.ingested = ingest_report.read;
    summary.ingest_skipped = ingest_report.skipped;

    let lexicon = match &cfg.header_lexicon {
        Some(path) => HeaderLexicon::from_file(path).map_err(stage_err("ingest"))?,
        None => HeaderLexicon::default(),
    };
    let mut emails = Vec::with_capacity(raw.len());
    for msg in &raw {
        match recover_original_headers(msg, &lexicon) {
            Ok(email) => emails.push(email),
            Err(_) => summary.unparseable += 1,
        }
    }

    // -- sanitize -----------------------------------------------------------
    let competitors: Vec<String> = match &cfg.competitors {
        Some(path) => read_lines_set(path)
            .map_err(stage_err("sanitize"))?
            .into_iter()
            .collect(),
        None => Vec::new(),
    };
    let sanitize_cfg = SanitizeConfig::new(
        &cfg.org_name,
        &competitors,
        cfg.sms_max_chars,
        lexicon.clone(),
    )
    .map_err(stage_err("sanitize"))?;
    let (mut emails, san_report) = sanitize(emails, &sanitize_cfg);
    summary.sanitization = san_report.clone();
    write_corpus_jsonl(&out("01_corpus.jsonl"), &emails, "sanitize")?;
    write_json(&out("01_sanitization.json"), &san_report, "sanitize")?;

    // -- dedup ---------------------------------------------------------------
    let mut text_cfg = TextConfig::default().with_stemmer(&cfg.stemmer);
    if let Some(path) = &cfg.stopwords {
        text_cfg = text_cfg.stopwords_from_file(path).map_err(stage_err("dedup"))?;
    }
    let tokenizer = Tokenizer::new(text_cfg).map_err(stage_err("dedup"))?;

    // chronological order so duplicate ids follow earliest-member timestamps
    emails.sort_by(|a, b| {
        let ka = (a.date.is_none(), a.date, a.id.clone());
        let kb = (b.date.is_none(), b.date, b.id.clone());
        ka.cmp(&kb)
    });
    let docs: Vec<TokenDoc> = emails
        .par_iter()
        .map(|e| tokenizer.clean_and_tokenize(&e.id, &e.body_text))
        .collect();
    let vocab = Vocabulary::build(docs.iter());
    let vectors: Vec<_> = docs
        .par_iter()
        .map(|d| tf_vector(d, &vocab, true))
        .collect();
    let matrix = similarity_matrix(&vectors, cfg.dedup_floor);

    let threshold = match (cfg.dedup_threshold, &cfg.tune_labels) {
        (Some(t), None) => t,
        (None, Some(path)) => {
            let mut reader = csv::Reader::from_path(path).map_err(stage_err("dedup"))?;
            let mut labeled = Vec::new();
            for row in reader.records() {
                let row = row.map_err(stage_err("dedup"))?;
                let group: u32 = row
                    .get(1)
                    .and_then(|g| g.parse().ok())
                    .ok_or_else(|| PipelineError::Stage {
                        stage: "dedup",
                        message: "tune_labels rows must be email_id,similarity_group_id".into(),
                    })?;
                labeled.push((row[0].to_string(), group));
            }
            let tuning = tune_threshold(
                &labeled,
                &vectors,
                cfg.tune_bootstrap_n,
                cfg.tune_sample_size.min(labeled.len()),
                cfg.seed_dedup,
            )
            .map_err(stage_err("dedup"))?;
            write_json(&out("02_threshold_tuning.json"), &tuning, "dedup")?;
            tuning.chosen_threshold
        }
        _ => unreachable!("config validation enforces the choice"),
    };
    summary.chosen_threshold = threshold;

    let assignment = assign_duplicate_ids(&matrix, threshold).map_err(stage_err("dedup"))?;
    for e in emails.iter_mut() {
        e.duplicate_id = assignment.get(&e.id).copied();
    }
    let campaign_list: Vec<CampaignCluster> = campaigns(&emails).map_err(stage_err("dedup"))?;
    summary.n_campaigns = campaign_list.len();
    write_corpus_jsonl(&out("02_corpus_dedup.jsonl"), &emails, "dedup")?;
    write_campaigns_csv(&out("02_campaigns.csv"), &campaign_list)?;

    // -- classify -------------------------------------------------------------
    let labels_map = read_labels_jsonl(&cfg.labels_file).map_err(stage_err("classify"))?;
    let docs_by_id: BTreeMap<&str, &TokenDoc> =
        docs.iter().map(|d| (d.email_id.as_str(), d)).collect();
    let train_docs: Vec<TokenDoc> = labels_map
        .keys()
        .filter_map(|id| docs_by_id.get(id.as_str()).map(|d| (*d).clone()))
        .collect();
    if train_docs.is_empty() {
        return Err(PipelineError::Stage {
            stage: "classify",
            message: "no labeled documents found in the corpus".into(),
        });
    }
    let train_cfg = LldaConfig {
        alpha: cfg.llda_alpha,
        beta: cfg.llda_beta,
        n_iterations: cfg.llda_train_iterations,
        burn_in: cfg.llda_burn_in.min(cfg.llda_train_iterations.saturating_sub(1)),
        average_last: 0,
        seed: cfg.seed_train,
        labels: crate::llda::default_labels(),
    };
    let model = train(&train_docs, &labels_map, &train_cfg).map_err(stage_err("classify"))?;
    model
        .save(&out("03_model.json"))
        .map_err(stage_err("classify"))?;

    let infer_cfg = LldaConfig {
        n_iterations: cfg.llda_infer_iterations,
        seed: cfg.seed_infer,
        ..train_cfg.clone()
    };
    let model_vocab_idx: std::collections::HashMap<&str, u32> = model
        .vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    let mut profiles: Vec<CognitiveProfile> = docs
        .par_iter()
        .map(|d| infer_prepared(&model, &model_vocab_idx, d, &infer_cfg))
        .collect();
    for p in profiles.iter_mut() {
        apply_presence_heuristic(p, cfg.presence_margin);
    }
    {
        let mut f = std::io::BufWriter::new(
            std::fs::File::create(out("04_profiles.jsonl")).map_err(stage_err("classify"))?,
        );
        for p in &profiles {
            let line = serde_json::to_string(p).map_err(stage_err("classify"))?;
            writeln!(f, "{line}").map_err(stage_err("classify"))?;
        }
    }

    // -- url intel --------------------------------------------------------------
    let org_domains: BTreeSet<String> = cfg.org_domains.iter().map(|d| d.to_lowercase()).collect();
    let allowlist = match &cfg.allowlist {
        Some(path) => read_lines_set(path).map_err(stage_err("urlintel"))?,
        None => BTreeSet::new(),
    };
    let mut suspicious: Vec<SuspiciousUrl> = Vec::new();
    for e in emails.iter_mut() {
        suspicious.extend(extract_and_flag(e, &org_domains, &allowlist));
    }
    suspicious.sort_by(|a, b| (&a.email_id, &a.url).cmp(&(&b.email_id, &b.url)));
    summary.n_suspicious = emails.iter().filter(|e| e.suspicious).count();

    let mut resolver = FixtureResolver::from_file(&cfg.redirects_file, cfg.seed_resolver)
        .map_err(stage_err("urlintel"))?;
    let mut records: BTreeMap<String, RedirectRecord> = BTreeMap::new();
    for url in &suspicious {
        for _ in 0..cfg.resolve_visits {
            let prior = records.remove(&url.url);
            let record = resolve_redirects(url, &mut resolver, prior, cfg.redirect_depth);
            records.insert(url.url.clone(), record);
        }
    }
    let record_list: Vec<RedirectRecord> = records.into_values().collect();
    let clicks = read_clicks_csv(&cfg.clicks_file).map_err(stage_err("urlintel"))?;
    let email_clicks = match_clicks(&suspicious, &record_list, &clicks);
    summary.n_clicked = email_clicks.len();

    let redirect_rows: Vec<EmailRedirect> = suspicious
        .iter()
        .filter_map(|s| {
            record_list
                .iter()
                .find(|r| r.suspicious_url == s.url)
                .map(|r| EmailRedirect {
                    email_id: s.email_id.clone(),
                    suspicious_url: s.url.clone(),
                    landing_urls: r.landing_urls.iter().cloned().collect(),
                    visits: r.visits,
                })
        })
        .collect();
    write_json(&out("05_redirects.json"), &redirect_rows, "urlintel")?;
    write_emailclicks_csv(&out("05_emailclicks.csv"), &email_clicks)?;
    write_corpus_jsonl(&out("05_corpus_final.jsonl"), &emails, "urlintel")?;

    let spoofs: BTreeMap<String, f64> = emails
        .iter()
        .map(|e| {
            (
                e.id.clone(),
                spoof_distance(&e.from_domain, &cfg.org_name) as f64,
            )
        })
        .collect();

    // -- fit + bootstrap -----------------------------------------------------------
    let labels = crate::llda::default_labels();
    let design = build_design(
        &profiles,
        &spoofs,
        &email_clicks,
        cfg.click_strategy,
        cfg.min_clicks,
        &labels,
    );
    summary.design_rows = design.n();
    crate::econometrics::write_design_csv(&design, &out("06_design.csv"))
        .map_err(stage_err("fit"))?;

    let model_id: PredictionModel = cfg.model.parse().map_err(stage_err("fit"))?;
    let selected = design
        .select(&model_id.regressors())
        .map_err(stage_err("fit"))?;

    // With too few clicked emails there is nothing to fit: emit an empty
    // queue and keep going (reports are still produced).
    let queue = if selected.n() > selected.k() + 1 {
        let fit = fit_poisson(&selected).map_err(stage_err("fit"))?;
        summary.fit_converged = fit.converged;
        write_json(&out("06_fit.json"), &fit, "fit")?;
        match stepwise(&design, &STEPWISE_ORDER) {
            Ok(ladder) => write_json(&out("06_stepwise.json"), &ladder, "fit")?,
            Err(e) => summary.stepwise_note = Some(format!("stepwise ladder skipped: {e}")),
        }

        let boot = bootstrap_fit(&selected, cfg.bootstrap_b, cfg.seed_bootstrap)
            .map_err(stage_err("bootstrap"))?;
        write_json(&out("06_bootstrap.json"), &boot, "bootstrap")?;

        // -- predict + rank --------------------------------------------------------
        let clicked_ids: BTreeSet<&str> =
            email_clicks.iter().map(|c| c.email_id.as_str()).collect();
        let profile_by_id: BTreeMap<&str, &CognitiveProfile> =
            profiles.iter().map(|p| (p.email_id.as_str(), p)).collect();
        let mut cohort_emails: Vec<&Email> = emails
            .iter()
            .filter(|e| e.suspicious && !clicked_ids.contains(e.id.as_str()))
            .collect();
        if cfg.predict_unique {
            let mut seen = BTreeSet::new();
            cohort_emails.retain(|e| match e.duplicate_id {
                Some(dup) => seen.insert(dup),
                None => true,
            });
        }
        let cohort: Vec<(CognitiveProfile, f64)> = cohort_emails
            .iter()
            .filter_map(|e| {
                profile_by_id.get(e.id.as_str()).map(|p| {
                    (
                        (*p).clone(),
                        spoofs.get(&e.id).copied().unwrap_or_default(),
                    )
                })
            })
            .collect();
        let training_stats = selected.regressor_stats();
        let scores = predict_clicks(
            &boot,
            &cohort,
            &labels,
            model_id,
            cfg.predict_draws,
            cfg.seed_predict,
            &training_stats,
        )
        .map_err(stage_err("predict"))?;
        write_scores_csv(&out("07_scores.csv"), &scores)?;
        triage_rank(scores)
    } else {
        summary.fit_note = Some(format!(
            "only {} rows passed the click filter (need > {}); fit and prediction skipped",
            selected.n(),
            selected.k() + 1
        ));
        write_scores_csv(&out("07_scores.csv"), &[])?;
        Vec::new()
    };
    write_scores_csv(&out("07_queue.csv"), &queue)?;
    summary.queue_len = queue.len();

    // -- report ---------------------------------------------------------------------
    let report = report_stats(
        &emails,
        &campaign_list,
        &profiles,
        &email_clicks,
        &spoofs,
        &labels,
        cfg.spoof_cutoff as f64,
    );
    write_report_csvs(&report, &out("08_report")).map_err(stage_err("report"))?;
    write_json(&out("summary.json"), &summary, "report")?;

    Ok(PipelineOutputs {
        queue,
        report,
        summary,
    })
}

fn write_campaigns_csv(path: &PathBuf, campaigns: &[CampaignCluster]) -> Result<(), PipelineError> {
    let mut text = String::from(
        "duplicate_id,samples,first_seen,last_seen,duration_days,duration_class,member_ids\n",
    );
    for c in campaigns {
        let fmt_ts = |t: &Option<chrono::DateTime<chrono::Utc>>| {
            t.map(|v| v.to_rfc3339()).unwrap_or_default()
        };
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.duplicate_id,
            c.samples,
            fmt_ts(&c.first_seen),
            fmt_ts(&c.last_seen),
            c.duration_days,
            c.duration_class.as_str(),
            c.member_ids.join(";")
        ));
    }
    std::fs::write(path, text).map_err(stage_err("dedup"))
}

fn write_emailclicks_csv(
    path: &PathBuf,
    rows: &[crate::urlintel::EmailClicks],
) -> Result<(), PipelineError> {
    let mut text =
        String::from("email_id,clicks_avg,clicks_sum,clicks_max,matched_landing_count\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.email_id, r.clicks_avg, r.clicks_sum, r.clicks_max, r.matched_landing_count
        ));
    }
    std::fs::write(path, text).map_err(stage_err("urlintel"))
}

fn write_scores_csv(path: &PathBuf, scores: &[TriageScore]) -> Result<(), PipelineError> {
    let mut text = String::from("email_id,mean,q025,q50,q975,model,in_domain\n");
    for s in scores {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.email_id,
            s.predicted_clicks_mean,
            s.predicted_clicks_q025,
            s.predicted_clicks_q50,
            s.predicted_clicks_q975,
            s.model_id.as_str(),
            s.in_domain
        ));
    }
    std::fs::write(path, text).map_err(stage_err("predict"))
}

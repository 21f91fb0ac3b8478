//! Subcommand definitions and dispatch.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use triage_core::app::{
    self, robustness_ratio, run_pipeline, simulate_click_generation, synth_corpus,
    ClickGenerationModel, EmailRedirect, Grouping, PipelineConfig, SynthSpec,
};
use triage_core::corpus::{
    ingest, recover_original_headers, sanitize, Email, HeaderLexicon, IngestFormat,
    SanitizeConfig,
};
use triage_core::dedup::{
    assign_duplicate_ids, campaigns, similarity_matrix, tune_threshold,
};
use triage_core::econometrics::{
    anova_chisq, bootstrap_fit, fit_poisson, predict_clicks, read_design_csv,
    simple_poisson_scan, triage_rank, BootstrapFit, Design, PredictionModel, ScanRow,
    TriageScore, STEPWISE_ORDER,
};
use triage_core::llda::{
    apply_presence_heuristic, cross_validate, infer, train, CognitiveProfile, LldaConfig,
    LldaModel,
};
use triage_core::textproc::{tf_vector, TextConfig, TokenDoc, Tokenizer, Vocabulary};
use triage_core::urlintel::{
    extract_and_flag, match_clicks, read_clicks_csv, resolve_redirects, spoof_distance,
    ClickStrategy, FixtureResolver, RedirectRecord, Resolve, SuspiciousUrl,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Stage(String),
}

type CliResult = Result<(), CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "triage",
    version,
    about = "Quantify persuasion triggers in phishing emails and rank attacks by expected clicks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TextOpts {
    /// Stemmer key ('none' or a snowball language).
    #[arg(long, default_value = "english")]
    stemmer: String,
    /// Stop-word file (UTF-8, one token per line).
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

impl TextOpts {
    fn tokenizer(&self) -> Result<Tokenizer, CliError> {
        let mut cfg = TextConfig::default().with_stemmer(&self.stemmer);
        if let Some(path) = &self.stopwords {
            cfg = cfg.stopwords_from_file(path).map_err(data)?;
        }
        Tokenizer::new(cfg).map_err(usage)
    }
}

#[derive(Args)]
struct LldaOpts {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.001)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: u32,
    #[arg(long, default_value_t = 900)]
    burn_in: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LldaOpts {
    fn config(&self) -> LldaConfig {
        LldaConfig {
            alpha: self.alpha,
            beta: self.beta,
            n_iterations: self.iterations,
            burn_in: self.burn_in.min(self.iterations.saturating_sub(1)),
            average_last: 0,
            seed: self.seed,
            labels: triage_core::llda::default_labels(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest raw messages, recover original headers, sanitize, and write
    /// the canonical corpus JSONL.
    Ingest {
        /// Input container format.
        #[arg(long, value_parser = ["eml-dir", "mbox", "jsonl"])]
        format: String,
        /// Organization name for the sanitization filter.
        #[arg(long)]
        org: String,
        /// File listing competitor organization names, one per line.
        #[arg(long)]
        competitors: Option<PathBuf>,
        /// SMS-like body length threshold.
        #[arg(long, default_value_t = 200)]
        sms_max_chars: usize,
        /// Header-label lexicon file for non-English corpora.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Re-run the sanitization filters on a canonical corpus.
    Sanitize {
        #[arg(long)]
        org: String,
        #[arg(long)]
        competitors: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        sms_max_chars: usize,
        input: PathBuf,
        output: PathBuf,
    },
    /// Assign duplicate ids (fixed or tuned threshold) and emit campaigns.
    Dedup {
        /// Fixed similarity threshold in [0,1].
        #[arg(long, conflicts_with = "tune")]
        threshold: Option<f64>,
        /// labels.csv (email_id,similarity_group_id) for threshold tuning.
        #[arg(long)]
        tune: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        bootstrap_n: usize,
        #[arg(long, default_value_t = 300)]
        sample_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sparse storage floor for the similarity matrix.
        #[arg(long, default_value_t = 0.05)]
        floor: f64,
        #[command(flatten)]
        text: TextOpts,
        /// Write campaign clusters to this CSV.
        #[arg(long)]
        campaigns: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Bootstrapped sensitivity/specificity threshold sweep.
    TuneThreshold {
        labels: PathBuf,
        corpus: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        bootstrap_n: usize,
        #[arg(long, default_value_t = 300)]
        sample_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        text: TextOpts,
        /// Write the full tuning table to this JSON file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the labeled topic model.
    Train {
        corpus: PathBuf,
        labels: PathBuf,
        model_out: PathBuf,
        #[command(flatten)]
        llda: LldaOpts,
        #[command(flatten)]
        text: TextOpts,
    },
    /// Classify a corpus with a trained model, producing profiles JSONL.
    Classify {
        model: PathBuf,
        corpus: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 200)]
        iterations: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Presence margin over the uniform probability.
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        #[command(flatten)]
        text: TextOpts,
    },
    /// Repeated k-fold cross validation with the PROPORTIONAL cutoff.
    Evaluate {
        corpus: PathBuf,
        labels: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[command(flatten)]
        llda: LldaOpts,
        #[command(flatten)]
        text: TextOpts,
    },
    /// Extract suspicious URLs and resolve their redirect chains.
    ResolveUrls {
        corpus: PathBuf,
        /// Redirect fixture file (suspicious_url -> next_url [weight]).
        #[arg(long, required_unless_present = "allow_network")]
        redirects: Option<PathBuf>,
        /// Resolve over the live network instead of the fixture.
        #[arg(long)]
        allow_network: bool,
        #[arg(long, value_delimiter = ',')]
        org_domains: Vec<String>,
        #[arg(long)]
        allowlist: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        visits: u32,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also rewrite the corpus with suspicious flags set.
        #[arg(long)]
        corpus_out: Option<PathBuf>,
    },
    /// Match resolved landing URLs against recorded clicks.
    MatchClicks {
        redirects: PathBuf,
        clicks: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a Poisson model (M1..M7 stepwise prefix, or PM1/PM2).
    Fit {
        design: PathBuf,
        #[arg(long, default_value = "PM1")]
        model: String,
        #[arg(long, default_value_t = 10)]
        min_clicks: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the chi-square comparison against the next-smaller
        /// stepwise model.
        #[arg(long)]
        anova: bool,
    },
    /// Bootstrap the coefficient distribution by case resampling.
    Bootstrap {
        design: PathBuf,
        #[arg(long, default_value = "PM1")]
        model: String,
        #[arg(short = 'B', long = "replicates", default_value_t = 5000)]
        b: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        min_clicks: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict clicks for a cohort from bootstrap draws.
    Predict {
        #[arg(long)]
        bootstrap: PathBuf,
        /// Cohort CSV: email_id, six trigger counts, SpoofDist.
        #[arg(long)]
        cohort: PathBuf,
        /// Training design CSV (for the in-domain rule).
        #[arg(long)]
        train_design: PathBuf,
        #[arg(long, default_value = "PM1")]
        model: String,
        #[arg(long, default_value_t = 50_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sort a score file into the triage queue.
    Rank {
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exploratory-report CSV bundle.
    Report {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        emailclicks: PathBuf,
        #[arg(long)]
        org: String,
        #[arg(long, default_value_t = 2)]
        spoof_cutoff: u32,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Per-group |C'|/|D| robustness ratios.
    Robustness {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        emailclicks: PathBuf,
        #[arg(long, default_value = "cosine")]
        grouping: String,
        #[arg(long, default_value_t = 5)]
        min_group: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo click-generation simulation.
    Simulate {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        emails: usize,
        /// Single delivery probability, or one value per email
        /// (comma-separated).
        #[arg(long, value_delimiter = ',')]
        p_delivery: Vec<f64>,
        #[arg(long)]
        p_detect: f64,
        #[arg(long)]
        p_notify: f64,
        #[arg(long)]
        p_click: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        emails: usize,
        #[arg(long, default_value_t = 60)]
        families: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0.12)]
        clicked_fraction: f64,
        #[arg(long, default_value_t = 0.12)]
        labeled_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the whole pipeline from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-trigger single-regressor Poisson scans.
    Scan {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        emailclicks: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        org: String,
        #[arg(long, default_value_t = 10)]
        min_clicks: u64,
    },
}

// ---------------------------------------------------------------------------
// shared IO
// ---------------------------------------------------------------------------

fn read_corpus(path: &Path) -> Result<Vec<Email>, CliError> {
    let text = std::fs::read_to_string(path).map_err(data)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let email: Email = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push(email);
    }
    Ok(out)
}

fn write_corpus(path: &Path, emails: &[Email]) -> CliResult {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(data)?);
    for e in emails {
        let line = serde_json::to_string(e).map_err(data)?;
        writeln!(f, "{line}").map_err(data)?;
    }
    Ok(())
}

fn read_profiles(path: &Path) -> Result<Vec<CognitiveProfile>, CliError> {
    let text = std::fs::read_to_string(path).map_err(data)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        out.push(serde_json::from_str(line).map_err(data)?);
    }
    Ok(out)
}

fn read_emailclicks(path: &Path) -> Result<Vec<triage_core::urlintel::EmailClicks>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(data)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row.map_err(data)?);
    }
    Ok(out)
}

fn tokenize_corpus(tokenizer: &Tokenizer, emails: &[Email]) -> Vec<TokenDoc> {
    emails
        .iter()
        .map(|e| tokenizer.clean_and_tokenize(&e.id, &e.body_text))
        .collect()
}

fn read_tune_labels(path: &Path) -> Result<Vec<(String, u32)>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(data)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(data)?;
        let group: u32 = row
            .get(1)
            .and_then(|g| g.parse().ok())
            .ok_or_else(|| CliError::Data("expected email_id,similarity_group_id".into()))?;
        out.push((row[0].to_string(), group));
    }
    Ok(out)
}

fn competitors_from(path: &Option<PathBuf>) -> Result<Vec<String>, CliError> {
    match path {
        Some(p) => Ok(std::fs::read_to_string(p)
            .map_err(data)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()),
        None => Ok(Vec::new()),
    }
}

fn select_model_design(design: &Design, model: &str) -> Result<Design, CliError> {
    if let Ok(pm) = model.parse::<PredictionModel>() {
        return design.select(&pm.regressors()).map_err(data);
    }
    if let Some(step) = model.strip_prefix('M').and_then(|n| n.parse::<usize>().ok()) {
        if (1..=STEPWISE_ORDER.len()).contains(&step) {
            return design.select(&STEPWISE_ORDER[..step]).map_err(data);
        }
    }
    Err(usage(format!(
        "unknown model '{model}' (expected M1..M7, PM1, or PM2)"
    )))
}

fn min_clicks_filter(design: &Design, min_clicks: u64) -> Design {
    let keep: Vec<usize> = (0..design.n())
        .filter(|i| design.y[*i] >= min_clicks)
        .collect();
    Design {
        email_ids: keep.iter().map(|i| design.email_ids[*i].clone()).collect(),
        y: keep.iter().map(|i| design.y[*i]).collect(),
        columns: design.columns.clone(),
        x: keep.iter().map(|i| design.x[*i].clone()).collect(),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult {
    println!("{}", serde_json::to_string_pretty(value).map_err(data)?);
    Ok(())
}

fn read_cohort_csv(path: &Path, labels: &[String]) -> Result<Vec<(CognitiveProfile, f64)>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(data)?;
    let headers = reader.headers().map_err(data)?.clone();
    let k = labels.len();
    if headers.len() != k + 2 {
        return Err(CliError::Data(format!(
            "cohort csv needs email_id, {k} trigger columns, SpoofDist"
        )));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(data)?;
        let counts: Result<Vec<u32>, _> = (1..=k).map(|i| row[i].parse::<u32>()).collect();
        let counts = counts.map_err(data)?;
        let spoof: f64 = row[k + 1].parse().map_err(data)?;
        out.push((
            CognitiveProfile {
                email_id: row[0].to_string(),
                trigger_counts: counts,
                label_probs: vec![1.0 / k as f64; k],
                vulns_present: vec![false; k],
                no_signal: false,
            },
            spoof,
        ));
    }
    Ok(out)
}

fn write_scores_csv(path: &Path, scores: &[TriageScore]) -> CliResult {
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
    std::fs::write(path, text).map_err(data)
}

fn read_scores_csv(path: &Path) -> Result<Vec<TriageScore>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(data)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(data)?;
        let parse = |i: usize| -> Result<f64, CliError> { row[i].parse().map_err(data) };
        out.push(TriageScore {
            email_id: row[0].to_string(),
            predicted_clicks_mean: parse(1)?,
            predicted_clicks_q025: parse(2)?,
            predicted_clicks_q50: parse(3)?,
            predicted_clicks_q975: parse(4)?,
            model_id: row[5].parse().map_err(usage)?,
            in_domain: row[6].parse().map_err(data)?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest {
            format,
            org,
            competitors,
            sms_max_chars,
            lexicon,
            input,
            output,
        } => {
            let format: IngestFormat = format.parse().map_err(usage)?;
            let lexicon = match lexicon {
                Some(p) => HeaderLexicon::from_file(&p).map_err(data)?,
                None => HeaderLexicon::default(),
            };
            let (raw, report) = ingest(&input, format).map_err(data)?;
            let mut unparseable = 0usize;
            let mut emails = Vec::new();
            for msg in &raw {
                match recover_original_headers(msg, &lexicon) {
                    Ok(e) => emails.push(e),
                    Err(_) => unparseable += 1,
                }
            }
            let competitors = competitors_from(&competitors)?;
            let cfg = SanitizeConfig::new(&org, &competitors, sms_max_chars, lexicon)
                .map_err(usage)?;
            let (kept, san) = sanitize(emails, &cfg);
            write_corpus(&output, &kept)?;
            print_json(&serde_json::json!({
                "ingested": report.read,
                "skipped": report.skipped,
                "unparseable": unparseable,
                "sanitization": san,
            }))
        }
        Command::Sanitize {
            org,
            competitors,
            sms_max_chars,
            input,
            output,
        } => {
            let emails = read_corpus(&input)?;
            let competitors = competitors_from(&competitors)?;
            let cfg = SanitizeConfig::new(
                &org,
                &competitors,
                sms_max_chars,
                HeaderLexicon::default(),
            )
            .map_err(usage)?;
            let (kept, san) = sanitize(emails, &cfg);
            write_corpus(&output, &kept)?;
            print_json(&san)
        }
        Command::Dedup {
            threshold,
            tune,
            bootstrap_n,
            sample_size,
            seed,
            floor,
            text,
            campaigns: campaigns_out,
            input,
            output,
        } => {
            let mut emails = read_corpus(&input)?;
            emails.sort_by(|a, b| {
                (a.date.is_none(), a.date, a.id.clone()).cmp(&(
                    b.date.is_none(),
                    b.date,
                    b.id.clone(),
                ))
            });
            let tokenizer = text.tokenizer()?;
            let docs = tokenize_corpus(&tokenizer, &emails);
            let vocab = Vocabulary::build(docs.iter());
            let vectors: Vec<_> = docs.iter().map(|d| tf_vector(d, &vocab, true)).collect();
            let chosen = match (threshold, tune) {
                (Some(t), None) => t,
                (None, Some(path)) => {
                    let labeled = read_tune_labels(&path)?;
                    let tuning = tune_threshold(
                        &labeled,
                        &vectors,
                        bootstrap_n,
                        sample_size.min(labeled.len()),
                        seed,
                    )
                    .map_err(data)?;
                    eprintln!("tuned threshold: {}", tuning.chosen_threshold);
                    tuning.chosen_threshold
                }
                _ => {
                    return Err(usage(
                        "exactly one of --threshold and --tune must be given",
                    ))
                }
            };
            let matrix = similarity_matrix(&vectors, floor.min(chosen));
            let assignment = assign_duplicate_ids(&matrix, chosen).map_err(data)?;
            for e in emails.iter_mut() {
                e.duplicate_id = assignment.get(&e.id).copied();
            }
            write_corpus(&output, &emails)?;
            if let Some(path) = campaigns_out {
                let clusters = campaigns(&emails).map_err(data)?;
                let mut text = String::from(
                    "duplicate_id,samples,first_seen,last_seen,duration_days,duration_class\n",
                );
                for c in &clusters {
                    text.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        c.duplicate_id,
                        c.samples,
                        c.first_seen.map(|t| t.to_rfc3339()).unwrap_or_default(),
                        c.last_seen.map(|t| t.to_rfc3339()).unwrap_or_default(),
                        c.duration_days,
                        c.duration_class.as_str()
                    ));
                }
                std::fs::write(path, text).map_err(data)?;
            }
            print_json(&serde_json::json!({
                "threshold": chosen,
                "emails": emails.len(),
                "components": emails.iter().filter_map(|e| e.duplicate_id).collect::<BTreeSet<_>>().len(),
            }))
        }
        Command::TuneThreshold {
            labels,
            corpus,
            bootstrap_n,
            sample_size,
            seed,
            text,
            out,
        } => {
            let emails = read_corpus(&corpus)?;
            let tokenizer = text.tokenizer()?;
            let docs = tokenize_corpus(&tokenizer, &emails);
            let vocab = Vocabulary::build(docs.iter());
            let vectors: Vec<_> = docs.iter().map(|d| tf_vector(d, &vocab, true)).collect();
            let labeled = read_tune_labels(&labels)?;
            let tuning = tune_threshold(
                &labeled,
                &vectors,
                bootstrap_n,
                sample_size.min(labeled.len()),
                seed,
            )
            .map_err(data)?;
            if let Some(path) = out {
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&tuning).map_err(data)?,
                )
                .map_err(data)?;
            }
            print_json(&serde_json::json!({
                "chosen_threshold": tuning.chosen_threshold,
                "bootstrap_n": tuning.bootstrap_n,
                "sample_size": tuning.sample_size,
            }))
        }
        Command::Train {
            corpus,
            labels,
            model_out,
            llda,
            text,
        } => {
            let emails = read_corpus(&corpus)?;
            let tokenizer = text.tokenizer()?;
            let label_map = app::read_labels_jsonl(&labels).map_err(CliError::Data)?;
            let docs: Vec<TokenDoc> = tokenize_corpus(&tokenizer, &emails)
                .into_iter()
                .filter(|d| label_map.contains_key(&d.email_id))
                .collect();
            let model = train(&docs, &label_map, &llda.config()).map_err(data)?;
            model.save(&model_out).map_err(data)?;
            print_json(&serde_json::json!({
                "vocab": model.vocab.len(),
                "labels": model.config.labels,
                "trained_docs": docs.len(),
            }))
        }
        Command::Classify {
            model,
            corpus,
            output,
            iterations,
            seed,
            margin,
            text,
        } => {
            let model = LldaModel::load(&model).map_err(data)?;
            let emails = read_corpus(&corpus)?;
            let tokenizer = text.tokenizer()?;
            let cfg = LldaConfig {
                n_iterations: iterations,
                seed,
                ..model.config.clone()
            };
            let mut out = std::io::BufWriter::new(std::fs::File::create(&output).map_err(data)?);
            for email in &emails {
                let doc = tokenizer.clean_and_tokenize(&email.id, &email.body_text);
                let mut profile = infer(&model, &doc, &cfg);
                apply_presence_heuristic(&mut profile, margin);
                writeln!(out, "{}", serde_json::to_string(&profile).map_err(data)?)
                    .map_err(data)?;
            }
            Ok(())
        }
        Command::Evaluate {
            corpus,
            labels,
            repeats,
            folds,
            llda,
            text,
        } => {
            let emails = read_corpus(&corpus)?;
            let tokenizer = text.tokenizer()?;
            let label_map = app::read_labels_jsonl(&labels).map_err(CliError::Data)?;
            let docs: Vec<TokenDoc> = tokenize_corpus(&tokenizer, &emails)
                .into_iter()
                .filter(|d| label_map.contains_key(&d.email_id))
                .collect();
            let report = cross_validate(&docs, &label_map, &llda.config(), repeats, folds, llda.seed)
                .map_err(data)?;
            print_json(&report)
        }
        Command::ResolveUrls {
            corpus,
            redirects,
            allow_network,
            org_domains,
            allowlist,
            visits,
            depth,
            seed,
            out,
            corpus_out,
        } => {
            let mut emails = read_corpus(&corpus)?;
            let org: BTreeSet<String> =
                org_domains.iter().map(|d| d.to_lowercase()).collect();
            let allow: BTreeSet<String> = match allowlist {
                Some(p) => std::fs::read_to_string(p)
                    .map_err(data)?
                    .lines()
                    .map(|l| l.trim().to_lowercase())
                    .filter(|l| !l.is_empty())
                    .collect(),
                None => BTreeSet::new(),
            };
            let mut suspicious: Vec<SuspiciousUrl> = Vec::new();
            for e in emails.iter_mut() {
                suspicious.extend(extract_and_flag(e, &org, &allow));
            }
            suspicious.sort_by(|a, b| (&a.email_id, &a.url).cmp(&(&b.email_id, &b.url)));

            let mut resolver: Box<dyn Resolve> = if allow_network {
                Box::new(crate::live::LiveResolver::new())
            } else {
                let path = redirects.ok_or_else(|| {
                    usage("--redirects is required unless --allow-network is set")
                })?;
                Box::new(FixtureResolver::from_file(&path, seed).map_err(data)?)
            };
            let mut records: BTreeMap<String, RedirectRecord> = BTreeMap::new();
            for url in &suspicious {
                for _ in 0..visits {
                    let prior = records.remove(&url.url);
                    let rec = resolve_redirects(url, resolver.as_mut(), prior, depth);
                    records.insert(url.url.clone(), rec);
                }
            }
            let rows: Vec<EmailRedirect> = suspicious
                .iter()
                .filter_map(|s| {
                    records.get(&s.url).map(|r| EmailRedirect {
                        email_id: s.email_id.clone(),
                        suspicious_url: s.url.clone(),
                        landing_urls: r.landing_urls.iter().cloned().collect(),
                        visits: r.visits,
                    })
                })
                .collect();
            std::fs::write(&out, serde_json::to_string_pretty(&rows).map_err(data)?)
                .map_err(data)?;
            if let Some(path) = corpus_out {
                write_corpus(&path, &emails)?;
            }
            print_json(&serde_json::json!({
                "suspicious_urls": suspicious.len(),
                "suspicious_emails": emails.iter().filter(|e| e.suspicious).count(),
            }))
        }
        Command::MatchClicks {
            redirects,
            clicks,
            out,
        } => {
            let rows: Vec<EmailRedirect> =
                serde_json::from_str(&std::fs::read_to_string(&redirects).map_err(data)?)
                    .map_err(data)?;
            let suspicious: Vec<SuspiciousUrl> = rows
                .iter()
                .map(|r| SuspiciousUrl {
                    email_id: r.email_id.clone(),
                    url: r.suspicious_url.clone(),
                    domain: String::new(),
                })
                .collect();
            let records: Vec<RedirectRecord> = rows
                .iter()
                .map(|r| RedirectRecord {
                    suspicious_url: r.suspicious_url.clone(),
                    landing_urls: r.landing_urls.iter().cloned().collect(),
                    visits: r.visits,
                })
                .collect();
            let clicks = read_clicks_csv(&clicks).map_err(data)?;
            let matched = match_clicks(&suspicious, &records, &clicks);
            let mut text =
                String::from("email_id,clicks_avg,clicks_sum,clicks_max,matched_landing_count\n");
            for m in &matched {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m.email_id, m.clicks_avg, m.clicks_sum, m.clicks_max, m.matched_landing_count
                ));
            }
            std::fs::write(&out, text).map_err(data)?;
            print_json(&serde_json::json!({"matched_emails": matched.len()}))
        }
        Command::Fit {
            design,
            model,
            min_clicks,
            out,
            anova,
        } => {
            let design = min_clicks_filter(&read_design_csv(&design).map_err(data)?, min_clicks);
            let selected = select_model_design(&design, &model)?;
            let fit = fit_poisson(&selected).map_err(data)?;
            if anova {
                if let Some(step) = model
                    .strip_prefix('M')
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|s| *s >= 2)
                {
                    let smaller = design
                        .select(&STEPWISE_ORDER[..step - 1])
                        .map_err(data)?;
                    let nested = fit_poisson(&smaller).map_err(data)?;
                    let (stat, df, p) = anova_chisq(&nested, &fit).map_err(data)?;
                    eprintln!("anova vs M{}: chi2 = {stat:.3}, df = {df}, p = {p:.5}", step - 1);
                }
            }
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&fit).map_err(data)?)
                    .map_err(data)?;
            }
            print_json(&fit)
        }
        Command::Bootstrap {
            design,
            model,
            b,
            seed,
            min_clicks,
            out,
        } => {
            let design = min_clicks_filter(&read_design_csv(&design).map_err(data)?, min_clicks);
            let selected = select_model_design(&design, &model)?;
            let boot = bootstrap_fit(&selected, b, seed).map_err(data)?;
            std::fs::write(&out, serde_json::to_string_pretty(&boot).map_err(data)?)
                .map_err(data)?;
            if let Some(w) = &boot.warning {
                eprintln!("warning: {w}");
            }
            print_json(&serde_json::json!({
                "kept": boot.draws.len(),
                "dropped": boot.dropped,
                "quantiles": boot.names.iter().zip(&boot.quantiles).collect::<Vec<_>>(),
            }))
        }
        Command::Predict {
            bootstrap,
            cohort,
            train_design,
            model,
            draws,
            seed,
            out,
        } => {
            let boot: BootstrapFit =
                serde_json::from_str(&std::fs::read_to_string(&bootstrap).map_err(data)?)
                    .map_err(data)?;
            let model: PredictionModel = model.parse().map_err(usage)?;
            let labels = triage_core::llda::default_labels();
            let cohort = read_cohort_csv(&cohort, &labels)?;
            let train_design = read_design_csv(&train_design).map_err(data)?;
            let selected = train_design.select(&model.regressors()).map_err(data)?;
            let scores = predict_clicks(
                &boot,
                &cohort,
                &labels,
                model,
                draws,
                seed,
                &selected.regressor_stats(),
            )
            .map_err(data)?;
            write_scores_csv(&out, &scores)?;
            print_json(&serde_json::json!({"scored": scores.len()}))
        }
        Command::Rank { scores, out } => {
            let ranked = triage_rank(read_scores_csv(&scores)?);
            write_scores_csv(&out, &ranked)?;
            print_json(&serde_json::json!({"ranked": ranked.len()}))
        }
        Command::Report {
            corpus,
            profiles,
            emailclicks,
            org,
            spoof_cutoff,
            out_dir,
        } => {
            let emails = read_corpus(&corpus)?;
            let profiles = read_profiles(&profiles)?;
            let clicks = read_emailclicks(&emailclicks)?;
            let clusters = campaigns(&emails).map_err(data)?;
            let spoofs: BTreeMap<String, f64> = emails
                .iter()
                .map(|e| (e.id.clone(), spoof_distance(&e.from_domain, &org) as f64))
                .collect();
            let bundle = app::report_stats(
                &emails,
                &clusters,
                &profiles,
                &clicks,
                &spoofs,
                &triage_core::llda::default_labels(),
                spoof_cutoff as f64,
            );
            app::write_report_csvs(&bundle, &out_dir).map_err(data)?;
            print_json(&serde_json::json!({
                "out_dir": out_dir,
                "campaigns": clusters.len(),
                "trend": bundle.weekly_spoof_trend.as_ref().map(|t| t.correlation),
            }))
        }
        Command::Robustness {
            corpus,
            profiles,
            emailclicks,
            grouping,
            min_group,
            out,
        } => {
            let emails = read_corpus(&corpus)?;
            let profiles = read_profiles(&profiles)?;
            let clicks = read_emailclicks(&emailclicks)?;
            let grouping: Grouping = grouping.parse().map_err(usage)?;
            let table = robustness_ratio(&emails, &profiles, &clicks, grouping, min_group);
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&table).map_err(data)?)
                    .map_err(data)?;
            }
            print_json(&table)
        }
        Command::Simulate {
            users,
            emails,
            p_delivery,
            p_detect,
            p_notify,
            p_click,
            seed,
        } => {
            let p_delivery = match p_delivery.len() {
                1 => vec![p_delivery[0]; emails],
                n if n == emails => p_delivery,
                n => {
                    return Err(usage(format!(
                        "--p-delivery needs 1 or {emails} values, got {n}"
                    )))
                }
            };
            let model = ClickGenerationModel {
                n_users: users,
                p_delivery,
                p_detect,
                p_notify,
                p_click,
                seed,
            };
            let sim = simulate_click_generation(&model);
            print_json(&serde_json::json!({
                "report_events": sim.report_events,
                "click_events": sim.click_events,
                "reported_emails": sim.reported_emails.len(),
                "clicked_emails": sim.clicked_emails.len(),
                "c_prime": sim.c_prime().len(),
                "expected_report_events": app::expected_report_events(&model),
                "expected_click_events": app::expected_click_events(&model),
            }))
        }
        Command::Synth {
            out,
            emails,
            families,
            noise,
            clicked_fraction,
            labeled_fraction,
            seed,
        } => {
            let spec = SynthSpec {
                n_emails: emails,
                n_families: families,
                token_noise: noise,
                clicked_fraction,
                labeled_fraction,
                ..SynthSpec::default()
            };
            let outputs = synth_corpus(&spec, seed, &out).map_err(data)?;
            print_json(&serde_json::json!({
                "dir": outputs.dir,
                "emails": outputs.truth.emails.len(),
                "config": outputs.config_path,
            }))
        }
        Command::Pipeline { config } => {
            let cfg = PipelineConfig::from_file(&config).map_err(usage)?;
            let outputs = run_pipeline(&cfg).map_err(|e| CliError::Stage(e.to_string()))?;
            print_json(&outputs.summary)
        }
        Command::Scan {
            profiles,
            emailclicks,
            corpus,
            org,
            min_clicks,
        } => {
            let profiles = read_profiles(&profiles)?;
            let clicks = read_emailclicks(&emailclicks)?;
            let emails = read_corpus(&corpus)?;
            let spoofs: BTreeMap<&str, f64> = emails
                .iter()
                .map(|e| {
                    (
                        e.id.as_str(),
                        spoof_distance(&e.from_domain, &org) as f64,
                    )
                })
                .collect();
            let by_id: BTreeMap<&str, &CognitiveProfile> =
                profiles.iter().map(|p| (p.email_id.as_str(), p)).collect();
            let rows: Vec<ScanRow> = clicks
                .iter()
                .filter_map(|c| {
                    let p = by_id.get(c.email_id.as_str())?;
                    let y = (c.by_strategy(ClickStrategy::Avg) + 0.5).floor() as u64;
                    if y < min_clicks {
                        return None;
                    }
                    Some(ScanRow {
                        email_id: c.email_id.clone(),
                        trigger_counts: p.trigger_counts.clone(),
                        vuln_count: p.vuln_count() as u32,
                        spoof_dist: spoofs.get(c.email_id.as_str()).copied().unwrap_or(0.0),
                        clicks: y,
                    })
                })
                .collect();
            let scan = simple_poisson_scan(&rows, &triage_core::llda::default_labels())
                .map_err(data)?;
            print_json(&serde_json::json!({
                "vuln_count": scan.vuln_count,
                "per_trigger": scan.per_trigger,
                "spoof": scan.spoof,
                "rows": scan.rows.len(),
            }))
        }
    }
}

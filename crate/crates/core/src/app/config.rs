//! Flat key-value pipeline configuration.
//!
//! Format: one `key = value` per line, `#` comments, versioned via the
//! `version` key. Every stage seed must be present; runs are never
//! implicitly seeded. Referenced files are checked at load time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urlintel::ClickStrategy;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {0}: expected 'key = value'")]
    BadLine(usize),
    #[error("unsupported config version {0}")]
    BadVersion(u32),
    #[error("missing required key '{0}'")]
    MissingKey(&'static str),
    #[error("invalid value for '{key}': {message}")]
    BadValue { key: String, message: String },
    #[error("referenced file for '{key}' does not exist: {path}")]
    MissingFile { key: &'static str, path: PathBuf },
    #[error("exactly one of 'dedup_threshold' and 'tune_labels' must be set")]
    ThresholdChoice,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub version: u32,
    // inputs
    pub input: PathBuf,
    pub format: String,
    pub out_dir: PathBuf,
    pub org_name: String,
    pub org_domains: Vec<String>,
    pub allowlist: Option<PathBuf>,
    pub competitors: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub stemmer: String,
    pub header_lexicon: Option<PathBuf>,
    pub sms_max_chars: usize,
    // dedup
    pub dedup_floor: f64,
    pub dedup_threshold: Option<f64>,
    pub tune_labels: Option<PathBuf>,
    pub tune_bootstrap_n: usize,
    pub tune_sample_size: usize,
    // classification
    pub labels_file: PathBuf,
    pub llda_alpha: f64,
    pub llda_beta: f64,
    pub llda_train_iterations: u32,
    pub llda_infer_iterations: u32,
    pub llda_burn_in: u32,
    pub presence_margin: f64,
    // url intel
    pub clicks_file: PathBuf,
    pub redirects_file: PathBuf,
    pub resolve_visits: u32,
    pub redirect_depth: usize,
    pub spoof_cutoff: u32,
    // econometrics
    pub click_strategy: ClickStrategy,
    pub min_clicks: u64,
    pub model: String,
    pub bootstrap_b: usize,
    pub predict_draws: usize,
    pub predict_unique: bool,
    // seeds, one per stochastic stage
    pub seed_dedup: u64,
    pub seed_train: u64,
    pub seed_infer: u64,
    pub seed_resolver: u64,
    pub seed_bootstrap: u64,
    pub seed_predict: u64,
    pub workers: usize,
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine(lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

macro_rules! get_parse {
    ($map:expr, $key:literal, $ty:ty) => {
        $map.get($key)
            .ok_or(ConfigError::MissingKey($key))?
            .parse::<$ty>()
            .map_err(|e| ConfigError::BadValue {
                key: $key.to_string(),
                message: e.to_string(),
            })?
    };
    ($map:expr, $key:literal, $ty:ty, $default:expr) => {
        match $map.get($key) {
            Some(v) => v.parse::<$ty>().map_err(|e| ConfigError::BadValue {
                key: $key.to_string(),
                message: e.to_string(),
            })?,
            None => $default,
        }
    };
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str_with_base(&text, base)
    }

    pub fn from_str_with_base(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let map = parse_kv(text)?;
        let resolve = |v: &String| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let opt_path = |key: &str| map.get(key).map(&resolve);

        let version = get_parse!(map, "version", u32, CONFIG_VERSION);
        if version != CONFIG_VERSION {
            return Err(ConfigError::BadVersion(version));
        }

        let cfg = PipelineConfig {
            version,
            input: resolve(map.get("input").ok_or(ConfigError::MissingKey("input"))?),
            format: map
                .get("format")
                .cloned()
                .unwrap_or_else(|| "jsonl".to_string()),
            out_dir: resolve(
                map.get("out_dir")
                    .ok_or(ConfigError::MissingKey("out_dir"))?,
            ),
            org_name: map
                .get("org_name")
                .ok_or(ConfigError::MissingKey("org_name"))?
                .clone(),
            org_domains: map
                .get("org_domains")
                .ok_or(ConfigError::MissingKey("org_domains"))?
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            allowlist: opt_path("allowlist"),
            competitors: opt_path("competitors"),
            stopwords: opt_path("stopwords"),
            stemmer: map
                .get("stemmer")
                .cloned()
                .unwrap_or_else(|| "english".to_string()),
            header_lexicon: opt_path("header_lexicon"),
            sms_max_chars: get_parse!(map, "sms_max_chars", usize, 200),
            dedup_floor: get_parse!(map, "dedup_floor", f64, 0.05),
            dedup_threshold: match map.get("dedup_threshold") {
                Some(v) => Some(v.parse().map_err(|_| ConfigError::BadValue {
                    key: "dedup_threshold".into(),
                    message: "expected a real in [0,1]".into(),
                })?),
                None => None,
            },
            tune_labels: opt_path("tune_labels"),
            tune_bootstrap_n: get_parse!(map, "tune_bootstrap_n", usize, 10_000),
            tune_sample_size: get_parse!(map, "tune_sample_size", usize, 300),
            labels_file: resolve(
                map.get("labels_file")
                    .ok_or(ConfigError::MissingKey("labels_file"))?,
            ),
            llda_alpha: get_parse!(map, "llda_alpha", f64, 1.0),
            llda_beta: get_parse!(map, "llda_beta", f64, 0.001),
            llda_train_iterations: get_parse!(map, "llda_train_iterations", u32, 1000),
            llda_infer_iterations: get_parse!(map, "llda_infer_iterations", u32, 200),
            llda_burn_in: get_parse!(map, "llda_burn_in", u32, 900),
            presence_margin: get_parse!(map, "presence_margin", f64, 0.05),
            clicks_file: resolve(
                map.get("clicks_file")
                    .ok_or(ConfigError::MissingKey("clicks_file"))?,
            ),
            redirects_file: resolve(
                map.get("redirects_file")
                    .ok_or(ConfigError::MissingKey("redirects_file"))?,
            ),
            resolve_visits: get_parse!(map, "resolve_visits", u32, 3),
            redirect_depth: get_parse!(map, "redirect_depth", usize, 10),
            spoof_cutoff: get_parse!(map, "spoof_cutoff", u32, 2),
            click_strategy: map
                .get("click_strategy")
                .map(|s| s.parse())
                .transpose()
                .map_err(|e: String| ConfigError::BadValue {
                    key: "click_strategy".into(),
                    message: e,
                })?
                .unwrap_or(ClickStrategy::Avg),
            min_clicks: get_parse!(map, "min_clicks", u64, 10),
            model: map.get("model").cloned().unwrap_or_else(|| "PM1".to_string()),
            bootstrap_b: get_parse!(map, "bootstrap_b", usize, 5000),
            predict_draws: get_parse!(map, "predict_draws", usize, 50_000),
            predict_unique: get_parse!(map, "predict_unique", bool, true),
            seed_dedup: get_parse!(map, "seed_dedup", u64),
            seed_train: get_parse!(map, "seed_train", u64),
            seed_infer: get_parse!(map, "seed_infer", u64),
            seed_resolver: get_parse!(map, "seed_resolver", u64),
            seed_bootstrap: get_parse!(map, "seed_bootstrap", u64),
            seed_predict: get_parse!(map, "seed_predict", u64),
            workers: get_parse!(map, "workers", usize, 1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.dedup_threshold.is_some() == self.tune_labels.is_some() {
            return Err(ConfigError::ThresholdChoice);
        }
        let must_exist: [(&'static str, &PathBuf); 4] = [
            ("input", &self.input),
            ("labels_file", &self.labels_file),
            ("clicks_file", &self.clicks_file),
            ("redirects_file", &self.redirects_file),
        ];
        for (key, path) in must_exist {
            if !path.exists() {
                return Err(ConfigError::MissingFile {
                    key,
                    path: path.clone(),
                });
            }
        }
        for (key, path) in [
            ("allowlist", &self.allowlist),
            ("competitors", &self.competitors),
            ("stopwords", &self.stopwords),
            ("tune_labels", &self.tune_labels),
            ("header_lexicon", &self.header_lexicon),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(ConfigError::MissingFile {
                        key,
                        path: p.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Render back to the flat format (used by the synthetic generator to
    /// emit a ready-to-run config).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("version", self.version.to_string());
        push("input", self.input.display().to_string());
        push("format", self.format.clone());
        push("out_dir", self.out_dir.display().to_string());
        push("org_name", self.org_name.clone());
        push("org_domains", self.org_domains.join(","));
        if let Some(p) = &self.allowlist {
            push("allowlist", p.display().to_string());
        }
        if let Some(p) = &self.competitors {
            push("competitors", p.display().to_string());
        }
        if let Some(p) = &self.stopwords {
            push("stopwords", p.display().to_string());
        }
        push("stemmer", self.stemmer.clone());
        if let Some(p) = &self.header_lexicon {
            push("header_lexicon", p.display().to_string());
        }
        push("sms_max_chars", self.sms_max_chars.to_string());
        push("dedup_floor", format!("{}", self.dedup_floor));
        if let Some(t) = self.dedup_threshold {
            push("dedup_threshold", format!("{t}"));
        }
        if let Some(p) = &self.tune_labels {
            push("tune_labels", p.display().to_string());
        }
        push("tune_bootstrap_n", self.tune_bootstrap_n.to_string());
        push("tune_sample_size", self.tune_sample_size.to_string());
        push("labels_file", self.labels_file.display().to_string());
        push("llda_alpha", format!("{}", self.llda_alpha));
        push("llda_beta", format!("{}", self.llda_beta));
        push(
            "llda_train_iterations",
            self.llda_train_iterations.to_string(),
        );
        push(
            "llda_infer_iterations",
            self.llda_infer_iterations.to_string(),
        );
        push("llda_burn_in", self.llda_burn_in.to_string());
        push("presence_margin", format!("{}", self.presence_margin));
        push("clicks_file", self.clicks_file.display().to_string());
        push("redirects_file", self.redirects_file.display().to_string());
        push("resolve_visits", self.resolve_visits.to_string());
        push("redirect_depth", self.redirect_depth.to_string());
        push("spoof_cutoff", self.spoof_cutoff.to_string());
        push(
            "click_strategy",
            match self.click_strategy {
                ClickStrategy::Avg => "avg".into(),
                ClickStrategy::Sum => "sum".into(),
                ClickStrategy::Max => "max".into(),
            },
        );
        push("min_clicks", self.min_clicks.to_string());
        push("model", self.model.clone());
        push("bootstrap_b", self.bootstrap_b.to_string());
        push("predict_draws", self.predict_draws.to_string());
        push("predict_unique", self.predict_unique.to_string());
        push("seed_dedup", self.seed_dedup.to_string());
        push("seed_train", self.seed_train.to_string());
        push("seed_infer", self.seed_infer.to_string());
        push("seed_resolver", self.seed_resolver.to_string());
        push("seed_bootstrap", self.seed_bootstrap.to_string());
        push("seed_predict", self.seed_predict.to_string());
        push("workers", self.workers.to_string());
        out
    }
}

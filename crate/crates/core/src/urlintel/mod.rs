//! Suspicious-URL intelligence.
//!
//! Extracts URLs whose registrable domain belongs to neither the
//! organization nor the general-purpose allowlist, resolves their redirect
//! chains to landing URLs (fixture-driven in tests, live behind an explicit
//! network flag in the CLI), matches landing URLs against recorded click
//! counts, and computes the Levenshtein spoof distance of From: domains.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Email;
use crate::rng::{stable_hash, stream_rng};
use crate::textproc::levenshtein;

#[derive(Debug, Error)]
pub enum UrlError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed redirect fixture line")]
    BadFixtureLine { path: String, line: usize },
    #[error("live resolution requested but no live resolver was configured")]
    LiveUnavailable,
}

/// A URL in an email body pointing outside the organization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspiciousUrl {
    pub email_id: String,
    pub url: String,
    /// Registrable domain, lowercase.
    pub domain: String,
}

/// Landing URLs discovered for one suspicious URL; grows monotonically
/// across visits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectRecord {
    pub suspicious_url: String,
    pub landing_urls: BTreeSet<String>,
    pub visits: u32,
}

/// Marker landing value recorded for loops, timeouts, and over-deep chains.
pub const UNRESOLVED: &str = "unresolved";

/// One recorded click observation for a landing URL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub landing_url: String,
    pub clicks: u64,
    pub observed_at: Option<DateTime<Utc>>,
}

/// Per-email click aggregates across all matched landing URLs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmailClicks {
    pub email_id: String,
    pub clicks_avg: f64,
    pub clicks_sum: u64,
    pub clicks_max: u64,
    pub matched_landing_count: usize,
}

/// Which aggregate feeds the regression design. Averaging is the
/// conservative default (summing over-reports repeat clicks by one user).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickStrategy {
    Avg,
    Sum,
    Max,
}

impl std::str::FromStr for ClickStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avg" => Ok(ClickStrategy::Avg),
            "sum" => Ok(ClickStrategy::Sum),
            "max" => Ok(ClickStrategy::Max),
            other => Err(format!("unknown click strategy '{other}'")),
        }
    }
}

impl EmailClicks {
    pub fn by_strategy(&self, strategy: ClickStrategy) -> f64 {
        match strategy {
            ClickStrategy::Avg => self.clicks_avg,
            ClickStrategy::Sum => self.clicks_sum as f64,
            ClickStrategy::Max => self.clicks_max as f64,
        }
    }
}

static URL_RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();

fn url_re() -> &'static Regex {
    URL_RE.get_or_init(|| Regex::new(r#"(?i)\b(?:https?://|www\.)[^\s<>"')\]]+"#).unwrap())
}

/// Host part of a URL, lowercased.
pub fn url_host(url: &str) -> String {
    let stripped = url
        .trim()
        .trim_start_matches("http://")
        .trim_start_matches("https://")
        .trim_start_matches("HTTP://")
        .trim_start_matches("HTTPS://");
    let host_port = stripped.split(['/', '?', '#']).next().unwrap_or("");
    let host = host_port.split('@').next_back().unwrap_or(host_port);
    host.split(':').next().unwrap_or(host).to_lowercase()
}

// Common two-label public suffixes; enough for registrable-domain
// extraction at corpus scale without a full suffix list.
const TWO_LABEL_SUFFIXES: [&str; 12] = [
    "co.uk", "org.uk", "ac.uk", "gov.uk", "com.au", "net.au", "org.au", "co.jp", "co.nz",
    "com.br", "co.in", "com.mx",
];

/// Registrable domain of a host: last two labels, or three when the last
/// two form a known two-label public suffix.
pub fn registrable_domain(host: &str) -> String {
    let host = host.trim_end_matches('.').to_lowercase();
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 2 {
        return host;
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let keep = if TWO_LABEL_SUFFIXES.contains(&last_two.as_str()) {
        3
    } else {
        2
    };
    labels[labels.len() - keep.min(labels.len())..].join(".")
}

fn domain_in_set(domain: &str, set: &BTreeSet<String>) -> bool {
    set.iter().any(|entry| {
        let entry = entry.to_lowercase();
        domain == entry || domain.ends_with(&format!(".{entry}"))
    })
}

/// URLs in `email`'s body whose registrable domain is neither org-owned nor
/// allowlisted.
pub fn extract_suspicious(
    email: &Email,
    org_domains: &BTreeSet<String>,
    allowlist: &BTreeSet<String>,
) -> Vec<SuspiciousUrl> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in url_re().find_iter(&email.body_text) {
        let url = m.as_str().trim_end_matches(['.', ',', ';', '!', '?']);
        let host = url_host(url);
        if host.is_empty() || !host.contains('.') {
            continue;
        }
        let domain = registrable_domain(&host);
        if domain_in_set(&domain, org_domains) || domain_in_set(&domain, allowlist) {
            continue;
        }
        if seen.insert(url.to_string()) {
            out.push(SuspiciousUrl {
                email_id: email.id.clone(),
                url: url.to_string(),
                domain,
            });
        }
    }
    out
}

/// Extract and set `email.suspicious` accordingly.
pub fn extract_and_flag(
    email: &mut Email,
    org_domains: &BTreeSet<String>,
    allowlist: &BTreeSet<String>,
) -> Vec<SuspiciousUrl> {
    let found = extract_suspicious(email, org_domains, allowlist);
    email.suspicious = !found.is_empty();
    found
}

/// One visit session: either a landing URL or an unresolved marker.
pub trait Resolve {
    fn resolve_once(&mut self, url: &str, max_depth: usize) -> String;
}

/// Deterministic simulation resolver driven by a redirect map.
///
/// Fixture lines: `suspicious_url -> next_url [weight]`; multiple lines per
/// source URL define a stochastic fan-out sampled by weight per visit. A URL
/// with no outgoing edge is a landing URL.
#[derive(Debug)]
pub struct FixtureResolver {
    edges: BTreeMap<String, Vec<(String, f64)>>,
    rng: ChaCha8Rng,
}

impl FixtureResolver {
    pub fn from_file(path: &Path, seed: u64) -> Result<Self, UrlError> {
        let text = std::fs::read_to_string(path).map_err(|source| UrlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str_with_seed(&text, seed, &path.display().to_string())
    }

    pub fn from_str_with_seed(text: &str, seed: u64, origin: &str) -> Result<Self, UrlError> {
        let mut edges: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, rest) = line.split_once("->").ok_or(UrlError::BadFixtureLine {
                path: origin.to_string(),
                line: lineno + 1,
            })?;
            let mut parts = rest.split_whitespace();
            let dst = parts.next().ok_or(UrlError::BadFixtureLine {
                path: origin.to_string(),
                line: lineno + 1,
            })?;
            let weight: f64 = match parts.next() {
                Some(w) => w.parse().map_err(|_| UrlError::BadFixtureLine {
                    path: origin.to_string(),
                    line: lineno + 1,
                })?,
                None => 1.0,
            };
            edges
                .entry(src.trim().to_string())
                .or_default()
                .push((dst.to_string(), weight));
        }
        Ok(FixtureResolver {
            edges,
            rng: stream_rng(seed, 0),
        })
    }

    fn step(&mut self, url: &str) -> Option<String> {
        let options = self.edges.get(url)?;
        if options.is_empty() {
            return None;
        }
        let total: f64 = options.iter().map(|(_, w)| w).sum();
        let mut pick = self.rng.random_range(0.0..total);
        for (dst, w) in options {
            if pick < *w {
                return Some(dst.clone());
            }
            pick -= w;
        }
        Some(options.last().unwrap().0.clone())
    }
}

impl Resolve for FixtureResolver {
    fn resolve_once(&mut self, url: &str, max_depth: usize) -> String {
        let mut current = url.to_string();
        let mut visited = BTreeSet::new();
        visited.insert(current.clone());
        for _ in 0..max_depth {
            match self.step(&current) {
                None => return current,
                Some(next) => {
                    if !visited.insert(next.clone()) {
                        return UNRESOLVED.to_string(); // loop
                    }
                    current = next;
                }
            }
        }
        UNRESOLVED.to_string() // depth exceeded
    }
}

pub const DEFAULT_REDIRECT_DEPTH: usize = 10;

/// Traverse `url` once more, merging the discovered landing into `prior`.
/// Each visit session is independent; the landing set grows monotonically
/// and `visits` counts every traversal including unresolved ones.
pub fn resolve_redirects(
    url: &SuspiciousUrl,
    resolver: &mut dyn Resolve,
    prior: Option<RedirectRecord>,
    max_depth: usize,
) -> RedirectRecord {
    let mut record = prior.unwrap_or_else(|| RedirectRecord {
        suspicious_url: url.url.clone(),
        landing_urls: BTreeSet::new(),
        visits: 0,
    });
    let landing = resolver.resolve_once(&url.url, max_depth);
    record.landing_urls.insert(landing);
    record.visits += 1;
    record
}

/// Canonical form used for exact landing-URL matching: lowercase host,
/// fragment stripped.
pub fn canonical_landing(url: &str) -> String {
    let url = url.trim();
    let url = match url.find('#') {
        Some(pos) => &url[..pos],
        None => url,
    };
    let (scheme, rest) = match url.find("://") {
        Some(pos) => (&url[..pos + 3], &url[pos + 3..]),
        None => ("", url),
    };
    match rest.find('/') {
        Some(slash) => format!(
            "{}{}{}",
            scheme.to_lowercase(),
            rest[..slash].to_lowercase(),
            &rest[slash..]
        ),
        None => format!("{}{}", scheme.to_lowercase(), rest.to_lowercase()),
    }
}

/// Load clicks.csv (columns `landing_url,clicks,observed_at`).
pub fn read_clicks_csv(path: &Path) -> Result<Vec<ClickRecord>, csv::Error> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<ClickRecord>() {
        out.push(row?);
    }
    Ok(out)
}

/// Aggregate clicks per email across all matched landing URLs of all its
/// suspicious URLs. Emails with no match are absent from the output. Click
/// attribution is per-landing: a landing shared by two emails counts fully
/// for both.
pub fn match_clicks(
    suspicious: &[SuspiciousUrl],
    records: &[RedirectRecord],
    clicks: &[ClickRecord],
) -> Vec<EmailClicks> {
    let mut click_totals: BTreeMap<String, u64> = BTreeMap::new();
    for c in clicks {
        *click_totals.entry(canonical_landing(&c.landing_url)).or_insert(0) += c.clicks;
    }
    let by_susp: BTreeMap<&str, &RedirectRecord> = records
        .iter()
        .map(|r| (r.suspicious_url.as_str(), r))
        .collect();

    // email id -> set of matched canonical landings
    let mut per_email: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for s in suspicious {
        let Some(record) = by_susp.get(s.url.as_str()) else {
            continue;
        };
        for landing in &record.landing_urls {
            if landing == UNRESOLVED {
                continue;
            }
            let canon = canonical_landing(landing);
            if click_totals.contains_key(&canon) {
                per_email.entry(s.email_id.as_str()).or_default().insert(canon);
            }
        }
    }

    per_email
        .into_iter()
        .map(|(email_id, landings)| {
            let values: Vec<u64> = landings.iter().map(|l| click_totals[l]).collect();
            let sum: u64 = values.iter().sum();
            let max = values.iter().copied().max().unwrap_or(0);
            EmailClicks {
                email_id: email_id.to_string(),
                clicks_avg: sum as f64 / values.len() as f64,
                clicks_sum: sum,
                clicks_max: max,
                matched_landing_count: values.len(),
            }
        })
        .collect()
}

/// Normalization for spoof comparison: lowercase and strip the public
/// suffix, so `org.com` is an exact spoof of organization `org`.
pub fn normalize_domain_for_spoof(domain: &str) -> String {
    let host = registrable_domain(&domain.to_lowercase());
    match host.split_once('.') {
        Some((first, _)) => first.to_string(),
        None => host,
    }
}

/// Levenshtein distance between the normalized From: domain and the bare
/// organization name. Empty From: domains compare against the whole name.
pub fn spoof_distance(from_domain: &str, org_name: &str) -> usize {
    let lhs = normalize_domain_for_spoof(from_domain);
    let rhs = normalize_domain_for_spoof(org_name);
    levenshtein(&lhs, &rhs)
}

/// Deterministic per-URL RNG stream for parallel resolution drivers.
pub fn url_stream(seed: u64, url: &str) -> ChaCha8Rng {
    stream_rng(seed, stable_hash(url))
}

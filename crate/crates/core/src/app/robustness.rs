//! Delivery-skew robustness check over the real pipeline artifacts.
//!
//! For each group of "similar" emails (same duplicate family, or same
//! cognitive-attack signature), the ratio of emails with at least one
//! matched click to all reported emails in the group. Under uniform email
//! delivery the ratios sit in a tight band; a skewed delivery distribution
//! splits the band.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::clickgen::coefficient_of_variation;
use crate::corpus::Email;
use crate::llda::CognitiveProfile;
use crate::urlintel::EmailClicks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    /// Duplicate families from cosine clustering.
    CosineFamily,
    /// Identical sets of present vulnerabilities.
    CognitiveSignature,
}

impl std::str::FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" | "family" => Ok(Grouping::CosineFamily),
            "signature" | "cognitive" => Ok(Grouping::CognitiveSignature),
            other => Err(format!("unknown grouping '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRatio {
    pub key: String,
    pub reported: usize,
    pub clicked_reported: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub grouping: Grouping,
    pub groups: Vec<GroupRatio>,
    /// Groups below the size threshold, excluded from the table.
    pub excluded_small: usize,
    pub mean: f64,
    pub sd: f64,
    pub cv: Option<f64>,
}

pub const DEFAULT_MIN_GROUP: usize = 5;

/// Compute per-group |C'|/|D| ratios. Every corpus email counts as
/// reported; "clicked" means at least one matched click record.
pub fn robustness_ratio(
    emails: &[Email],
    profiles: &[CognitiveProfile],
    clicks: &[EmailClicks],
    grouping: Grouping,
    min_group: usize,
) -> RobustnessTable {
    let clicked_ids: BTreeSet<&str> = clicks
        .iter()
        .filter(|c| c.matched_landing_count > 0)
        .map(|c| c.email_id.as_str())
        .collect();
    let signature_of: BTreeMap<&str, String> = profiles
        .iter()
        .map(|p| {
            let sig: String = p
                .vulns_present
                .iter()
                .map(|b| if *b { '1' } else { '0' })
                .collect();
            (p.email_id.as_str(), sig)
        })
        .collect();

    let mut groups: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for email in emails {
        let key = match grouping {
            Grouping::CosineFamily => match email.duplicate_id {
                Some(id) => format!("family-{id}"),
                None => continue,
            },
            Grouping::CognitiveSignature => match signature_of.get(email.id.as_str()) {
                Some(sig) => format!("sig-{sig}"),
                None => continue,
            },
        };
        let entry = groups.entry(key).or_insert((0, 0));
        entry.0 += 1;
        if clicked_ids.contains(email.id.as_str()) {
            entry.1 += 1;
        }
    }

    let mut out = Vec::new();
    let mut excluded_small = 0;
    for (key, (reported, clicked)) in groups {
        if reported < min_group {
            excluded_small += 1;
            continue;
        }
        out.push(GroupRatio {
            key,
            reported,
            clicked_reported: clicked,
            ratio: clicked as f64 / reported as f64,
        });
    }
    let ratios: Vec<f64> = out.iter().map(|g| g.ratio).collect();
    let mean = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let sd = crate::econometrics::stats::sample_sd(&ratios);
    RobustnessTable {
        grouping,
        cv: coefficient_of_variation(&ratios),
        groups: out,
        excluded_small,
        mean,
        sd,
    }
}

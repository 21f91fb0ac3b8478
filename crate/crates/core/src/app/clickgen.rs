//! Data-generation model for the delivery-skew robustness check.
//!
//! Each (email, user) pair is an independent trial: the email reaches the
//! user with the email's delivery probability; a delivered email is either
//! detected (and then possibly reported) or undetected (and then possibly
//! clicked). Reporting and clicking are mutually exclusive per user, which
//! mirrors how a reported email cannot also be that user's click.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickGenerationModel {
    pub n_users: usize,
    /// Per-email delivery probability P_e(u); one entry per email.
    pub p_delivery: Vec<f64>,
    /// P(detect | delivered).
    pub p_detect: f64,
    /// P(notify | detected).
    pub p_notify: f64,
    /// P(click | not detected).
    pub p_click: f64,
    pub seed: u64,
}

impl ClickGenerationModel {
    pub fn n_emails(&self) -> usize {
        self.p_delivery.len()
    }

    fn validate(&self) {
        assert!(self.p_delivery.iter().all(|p| (0.0..=1.0).contains(p)));
        for p in [self.p_detect, self.p_notify, self.p_click] {
            assert!((0.0..=1.0).contains(&p), "probability out of range");
        }
    }
}

/// Realized sets from one Monte Carlo pass over every (email, user) pair.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimOutcome {
    pub report_events: usize,
    pub click_events: usize,
    pub delivered_events: usize,
    pub reported_emails: BTreeSet<u32>,
    pub clicked_emails: BTreeSet<u32>,
}

impl SimOutcome {
    /// Emails both reported and clicked (the observable clicked set).
    pub fn c_prime(&self) -> BTreeSet<u32> {
        self.reported_emails
            .intersection(&self.clicked_emails)
            .copied()
            .collect()
    }
}

/// One Monte Carlo realization. Per-email RNG streams keep the outcome
/// independent of email iteration order.
pub fn simulate_click_generation(model: &ClickGenerationModel) -> SimOutcome {
    model.validate();
    let mut out = SimOutcome::default();
    for e in 0..model.n_emails() {
        let mut rng = stream_rng(model.seed, e as u64);
        let p_del = model.p_delivery[e];
        for _u in 0..model.n_users {
            if rng.random::<f64>() >= p_del {
                continue;
            }
            out.delivered_events += 1;
            if rng.random::<f64>() < model.p_detect {
                if rng.random::<f64>() < model.p_notify {
                    out.report_events += 1;
                    out.reported_emails.insert(e as u32);
                }
            } else if rng.random::<f64>() < model.p_click {
                out.click_events += 1;
                out.clicked_emails.insert(e as u32);
            }
        }
    }
    out
}

/// Analytic expectation of the number of report events:
/// sum over emails and users of P_e(u) * P(det) * P(notify).
pub fn expected_report_events(model: &ClickGenerationModel) -> f64 {
    model.n_users as f64
        * model.p_detect
        * model.p_notify
        * model.p_delivery.iter().sum::<f64>()
}

/// Binomial standard deviation of the report-event count.
pub fn report_events_sd(model: &ClickGenerationModel) -> f64 {
    let per_email: f64 = model
        .p_delivery
        .iter()
        .map(|p_del| {
            let p = p_del * model.p_detect * model.p_notify;
            p * (1.0 - p)
        })
        .sum();
    (model.n_users as f64 * per_email).sqrt()
}

/// Analytic expectation of the number of click events.
pub fn expected_click_events(model: &ClickGenerationModel) -> f64 {
    model.n_users as f64
        * (1.0 - model.p_detect)
        * model.p_click
        * model.p_delivery.iter().sum::<f64>()
}

/// Per-group ratio |C' ∩ group| / |D ∩ group| over email-index groups;
/// groups with no reported email are skipped.
pub fn ratios_by_group(groups: &[Vec<usize>], sim: &SimOutcome) -> Vec<f64> {
    let c_prime = sim.c_prime();
    groups
        .iter()
        .filter_map(|members| {
            let reported = members
                .iter()
                .filter(|e| sim.reported_emails.contains(&(**e as u32)))
                .count();
            if reported == 0 {
                return None;
            }
            let clicked = members
                .iter()
                .filter(|e| c_prime.contains(&(**e as u32)))
                .count();
            Some(clicked as f64 / reported as f64)
        })
        .collect()
}

/// Sample coefficient of variation (sd / mean); None for empty input or
/// zero mean.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean.abs() < 1e-12 {
        return None;
    }
    if values.len() < 2 {
        return Some(0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (values.len() - 1) as f64;
    Some(var.sqrt() / mean)
}

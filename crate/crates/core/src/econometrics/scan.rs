//! Single-regressor Poisson scans backing the exploratory analysis: number
//! of distinct vulnerabilities present, each trigger count on its own, and
//! the spoof distance, each regressed against clicks.

use serde::{Deserialize, Serialize};

use super::stats::normal_two_sided_p;
use super::{fit_poisson, Design, FitError};

/// One input row (already filtered at the minimum-clicks cutoff).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub email_id: String,
    pub trigger_counts: Vec<u32>,
    pub vuln_count: u32,
    pub spoof_dist: f64,
    pub clicks: u64,
}

/// Slope estimate with Wald two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub alpha: f64,
    pub beta: f64,
    pub se: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub vuln_count: SlopeFit,
    pub per_trigger: Vec<(String, SlopeFit)>,
    pub spoof: SlopeFit,
    /// The scatter table behind the per-trigger plots.
    pub rows: Vec<ScanRow>,
}

fn single_regressor(rows: &[ScanRow], xs: &[f64]) -> Result<SlopeFit, FitError> {
    let mean = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    if var < 1e-12 {
        // Constant regressor: the slope is identically 0, nothing to test.
        let ybar = rows.iter().map(|r| r.clicks as f64).sum::<f64>() / rows.len().max(1) as f64;
        return Ok(SlopeFit {
            alpha: ybar.max(1e-12).ln(),
            beta: 0.0,
            se: f64::INFINITY,
            p: 1.0,
        });
    }
    let design = Design::new(
        rows.iter().map(|r| r.email_id.clone()).collect(),
        rows.iter().map(|r| r.clicks).collect(),
        &["x".to_string()],
        xs.iter().map(|x| vec![*x]).collect(),
    );
    let fit = fit_poisson(&design)?;
    let z = fit.coef[1] / fit.se[1];
    Ok(SlopeFit {
        alpha: fit.coef[0],
        beta: fit.coef[1],
        se: fit.se[1],
        p: normal_two_sided_p(z),
    })
}

/// Run all single-regressor fits. `labels` names the trigger columns.
pub fn simple_poisson_scan(rows: &[ScanRow], labels: &[String]) -> Result<ScanResult, FitError> {
    if rows.len() < 3 {
        return Err(FitError::TooFewRows {
            n: rows.len(),
            k: 2,
        });
    }
    let vuln_xs: Vec<f64> = rows.iter().map(|r| r.vuln_count as f64).collect();
    let spoof_xs: Vec<f64> = rows.iter().map(|r| r.spoof_dist).collect();
    let per_trigger = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let xs: Vec<f64> = rows
                .iter()
                .map(|r| r.trigger_counts.get(i).copied().unwrap_or(0) as f64)
                .collect();
            single_regressor(rows, &xs).map(|s| (label.clone(), s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScanResult {
        vuln_count: single_regressor(rows, &vuln_xs)?,
        per_trigger,
        spoof: single_regressor(rows, &spoof_xs)?,
        rows: rows.to_vec(),
    })
}

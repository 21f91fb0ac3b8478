//! Poisson regression and triage scoring.
//!
//! Fits `log(E[clicks]) = alpha + beta' x` by iteratively reweighted least
//! squares with the log link, runs the stepwise M1..M7 ladder, compares
//! nested fits with a chi-square likelihood-ratio test, bootstraps the
//! coefficient distribution by case resampling, and converts bootstrap
//! draws into per-email predicted-click intervals for the triage queue.

mod bootstrap;
mod predict;
mod scan;
pub mod stats;

pub use bootstrap::{bootstrap_fit, BootstrapFit, CoefQuantiles};
pub use predict::{
    predict_clicks, triage_rank, PredictionModel, RegressorStats, TriageScore,
};
pub use scan::{simple_poisson_scan, ScanResult, ScanRow, SlopeFit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use stats::{chi2_sf, ln_factorial};

/// Regressor column names in the canonical order (the six trigger counts,
/// then the spoof distance).
pub const REGRESSORS: [&str; 7] = [
    "Reciprocity",
    "Consistency",
    "SocialProof",
    "Authority",
    "Liking",
    "Scarcity",
    "SpoofDist",
];

/// Stepwise order: one regressor added per model M1..M7.
pub const STEPWISE_ORDER: [&str; 7] = [
    "Reciprocity",
    "Consistency",
    "SocialProof",
    "Authority",
    "Scarcity",
    "Liking",
    "SpoofDist",
];

pub const INTERCEPT: &str = "alpha";
pub const DEFAULT_MIN_CLICKS: u64 = 10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need more rows than coefficients: n = {n}, K = {k}")]
    TooFewRows { n: usize, k: usize },
    #[error("design matrix is rank deficient; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("models are not nested or were fit on different data")]
    NotNested,
    #[error("column '{0}' not present in design")]
    UnknownColumn(String),
    #[error("bootstrap needs B >= 100, got {0}")]
    TooFewReplicates(usize),
    #[error("no coefficient draws available")]
    EmptyDraws,
    #[error("prediction draws must be >= 1")]
    NoPredictionDraws,
    #[error("bootstrap regressors {bootstrap:?} do not match model regressors {model:?}")]
    RegressorMismatch {
        bootstrap: Vec<String>,
        model: Vec<String>,
    },
    #[error("design csv error: {0}")]
    Csv(String),
}

/// Fitting data: click counts plus the design matrix (intercept column
/// first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub email_ids: Vec<String>,
    pub y: Vec<u64>,
    /// Column names including the leading intercept.
    pub columns: Vec<String>,
    /// Row-major, `columns.len()` entries per row, first entry 1.0.
    pub x: Vec<Vec<f64>>,
}

impl Design {
    /// Build from regressor rows (intercept added here).
    pub fn new(
        email_ids: Vec<String>,
        y: Vec<u64>,
        regressors: &[String],
        rows: Vec<Vec<f64>>,
    ) -> Self {
        let mut columns = vec![INTERCEPT.to_string()];
        columns.extend(regressors.iter().cloned());
        let x = rows
            .into_iter()
            .map(|r| {
                let mut row = Vec::with_capacity(r.len() + 1);
                row.push(1.0);
                row.extend(r);
                row
            })
            .collect();
        Design {
            email_ids,
            y,
            columns,
            x,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    /// Project onto `alpha + keep` preserving row order.
    pub fn select(&self, keep: &[&str]) -> Result<Design, FitError> {
        let mut idx = vec![0usize]; // intercept
        for name in keep {
            let pos = self
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| FitError::UnknownColumn(name.to_string()))?;
            idx.push(pos);
        }
        Ok(Design {
            email_ids: self.email_ids.clone(),
            y: self.y.clone(),
            columns: idx.iter().map(|i| self.columns[*i].clone()).collect(),
            x: self
                .x
                .iter()
                .map(|row| idx.iter().map(|i| row[*i]).collect())
                .collect(),
        })
    }

    /// Mean and sample sd of every non-intercept column (the training
    /// statistics backing the prediction in-domain rule).
    pub fn regressor_stats(&self) -> Vec<RegressorStats> {
        (1..self.k())
            .map(|c| {
                let col: Vec<f64> = self.x.iter().map(|row| row[c]).collect();
                RegressorStats {
                    name: self.columns[c].clone(),
                    mean: stats::mean(&col),
                    sd: stats::sample_sd(&col),
                }
            })
            .collect()
    }
}

/// A fitted Poisson GLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    /// Coefficient names, intercept first.
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub loglik: f64,
    pub null_loglik: f64,
    pub deviance: f64,
    /// `1 - (loglik - K) / null_loglik` with K counting the intercept.
    pub adj_mcfadden_r2: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl PoissonFit {
    pub fn coef_by_name(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coef[i])
    }
}

const MAX_IRLS_ITERATIONS: usize = 100;
const GRADIENT_TOL: f64 = 1e-8;
const ETA_CLAMP: f64 = 30.0;

fn poisson_loglik(y: &[u64], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(yi, mui)| {
            let mui = mui.max(1e-300);
            *yi as f64 * mui.ln() - mui - ln_factorial(*yi)
        })
        .sum()
}

fn poisson_deviance(y: &[u64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(yi, mui)| {
            let yi = *yi as f64;
            let term = if yi > 0.0 { yi * (yi / mui).ln() } else { 0.0 };
            term - (yi - mui)
        })
        .sum::<f64>()
}

/// Cholesky factorization of a symmetric positive-definite matrix stored
/// row-major; returns None when a pivot collapses (rank deficiency).
fn cholesky(a: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                let scale = a[i * p + i].abs().max(1.0);
                if sum <= scale * 1e-12 {
                    return None;
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0f64; p];
    for i in 0..p {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * p + k] * y[k];
        }
        y[i] = sum / l[i * p + i];
    }
    let mut x = vec![0.0f64; p];
    for i in (0..p).rev() {
        let mut sum = y[i];
        for k in (i + 1)..p {
            sum -= l[k * p + i] * x[k];
        }
        x[i] = sum / l[i * p + i];
    }
    x
}

fn cholesky_inverse_diag(l: &[f64], p: usize) -> Vec<f64> {
    // Solve L L' X = I column by column, keep the diagonal.
    let mut diag = vec![0.0f64; p];
    for col in 0..p {
        let mut e = vec![0.0f64; p];
        e[col] = 1.0;
        let x = cholesky_solve(l, p, &e);
        diag[col] = x[col];
    }
    diag
}

/// Name the columns responsible for a singular Gram matrix: Gaussian
/// elimination with partial pivoting; columns with a collapsed pivot are
/// the collinear ones.
fn collinear_columns(design: &Design) -> Vec<String> {
    let p = design.k();
    let n = design.n();
    let mut gram = vec![0.0f64; p * p];
    for row in &design.x {
        for i in 0..p {
            for j in 0..p {
                gram[i * p + j] += row[i] * row[j];
            }
        }
    }
    let scale: f64 = (0..p).map(|i| gram[i * p + i]).fold(0.0, f64::max).max(1.0);
    let mut bad = Vec::new();
    let mut used = vec![false; n.min(p)];
    let _ = &mut used;
    for col in 0..p {
        // find pivot row among remaining
        let mut pivot = col;
        for r in col..p {
            if gram[r * p + col].abs() > gram[pivot * p + col].abs() {
                pivot = r;
            }
        }
        if gram[pivot * p + col].abs() < scale * 1e-10 {
            bad.push(design.columns[col].clone());
            continue;
        }
        if pivot != col {
            for j in 0..p {
                gram.swap(col * p + j, pivot * p + j);
            }
        }
        for r in (col + 1)..p {
            let f = gram[r * p + col] / gram[col * p + col];
            for j in col..p {
                gram[r * p + j] -= f * gram[col * p + j];
            }
        }
    }
    if bad.is_empty() {
        bad.push("unknown".to_string());
    }
    bad
}

/// Maximum-likelihood Poisson fit via IRLS with log link.
///
/// Convergence requires the max-norm of the score vector X'(y - mu) to drop
/// below 1e-8; after 100 iterations the last iterate is returned with
/// `converged = false`. Rank-deficient designs error out naming the
/// collinear columns.
pub fn fit_poisson(design: &Design) -> Result<PoissonFit, FitError> {
    let n = design.n();
    let p = design.k();
    if n <= p {
        return Err(FitError::TooFewRows { n, k: p });
    }

    let ybar = design.y.iter().sum::<u64>() as f64 / n as f64;
    let mut beta = vec![0.0f64; p];
    beta[0] = ybar.max(1e-8).ln();

    let mut eta = vec![0.0f64; n];
    let mut mu = vec![0.0f64; n];
    let mut converged = false;
    let mut iterations = 0;
    let mut last_l: Option<Vec<f64>> = None;

    for iter in 1..=MAX_IRLS_ITERATIONS {
        iterations = iter;
        for (i, row) in design.x.iter().enumerate() {
            let e: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            eta[i] = e.clamp(-ETA_CLAMP, ETA_CLAMP);
            mu[i] = eta[i].exp();
        }
        // score vector
        let mut grad = vec![0.0f64; p];
        for (i, row) in design.x.iter().enumerate() {
            let r = design.y[i] as f64 - mu[i];
            for j in 0..p {
                grad[j] += row[j] * r;
            }
        }
        if grad.iter().all(|g| g.abs() < GRADIENT_TOL) {
            converged = true;
            break;
        }
        // weighted normal equations: (X' W X) delta_target = X' W z
        let mut xtwx = vec![0.0f64; p * p];
        let mut xtwz = vec![0.0f64; p];
        for (i, row) in design.x.iter().enumerate() {
            let w = mu[i];
            let z = eta[i] + (design.y[i] as f64 - mu[i]) / mu[i].max(1e-300);
            for a in 0..p {
                let wa = w * row[a];
                xtwz[a] += wa * z;
                for b in 0..=a {
                    xtwx[a * p + b] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in (a + 1)..p {
                xtwx[a * p + b] = xtwx[b * p + a];
            }
        }
        let l = match cholesky(&xtwx, p) {
            Some(l) => l,
            None => return Err(FitError::RankDeficient(collinear_columns(design))),
        };
        beta = cholesky_solve(&l, p, &xtwz);
        last_l = Some(l);
    }

    // final state at beta
    for (i, row) in design.x.iter().enumerate() {
        let e: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        eta[i] = e.clamp(-ETA_CLAMP, ETA_CLAMP);
        mu[i] = eta[i].exp();
    }
    let se = {
        // information matrix at the final iterate
        let mut xtwx = vec![0.0f64; p * p];
        for (i, row) in design.x.iter().enumerate() {
            let w = mu[i];
            for a in 0..p {
                for b in 0..=a {
                    xtwx[a * p + b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in (a + 1)..p {
                xtwx[a * p + b] = xtwx[b * p + a];
            }
        }
        match cholesky(&xtwx, p).or(last_l) {
            Some(l) => cholesky_inverse_diag(&l, p)
                .into_iter()
                .map(|v| v.max(0.0).sqrt())
                .collect(),
            None => vec![f64::NAN; p],
        }
    };

    let loglik = poisson_loglik(&design.y, &mu);
    let null_mu = vec![ybar.max(1e-300); n];
    let null_loglik = poisson_loglik(&design.y, &null_mu);
    let adj = if null_loglik.abs() > 0.0 {
        1.0 - (loglik - p as f64) / null_loglik
    } else {
        0.0
    };

    Ok(PoissonFit {
        names: design.columns.clone(),
        coef: beta,
        se,
        loglik,
        null_loglik,
        deviance: poisson_deviance(&design.y, &mu),
        adj_mcfadden_r2: adj,
        n,
        converged,
        iterations,
    })
}

/// Cumulative nested fits adding one regressor at a time in `order`
/// (M1..M7 for the canonical seven-step order).
pub fn stepwise(design: &Design, order: &[&str]) -> Result<Vec<PoissonFit>, FitError> {
    let mut fits = Vec::with_capacity(order.len());
    for upto in 1..=order.len() {
        let sub = design.select(&order[..upto])?;
        fits.push(fit_poisson(&sub)?);
    }
    Ok(fits)
}

/// Likelihood-ratio chi-square comparison of two nested fits on the same
/// data. Returns (delta deviance, delta df, upper-tail p).
pub fn anova_chisq(
    nested: &PoissonFit,
    fuller: &PoissonFit,
) -> Result<(f64, usize, f64), FitError> {
    if nested.n != fuller.n {
        return Err(FitError::NotNested);
    }
    if !nested.names.iter().all(|n| fuller.names.contains(n)) {
        return Err(FitError::NotNested);
    }
    if fuller.names.len() < nested.names.len() {
        return Err(FitError::NotNested);
    }
    let delta_df = fuller.names.len() - nested.names.len();
    let stat = (nested.deviance - fuller.deviance).max(0.0);
    let p = if delta_df == 0 {
        1.0
    } else {
        chi2_sf(stat, delta_df)
    };
    Ok((stat, delta_df, p))
}

// ---------------------------------------------------------------------------
// design.csv
// ---------------------------------------------------------------------------

/// Assemble the fitting design from classification profiles, spoof
/// distances, and matched clicks; `y` is the selected click aggregate
/// rounded half-up, filtered at `min_clicks`.
pub fn build_design(
    profiles: &[crate::llda::CognitiveProfile],
    spoof: &std::collections::BTreeMap<String, f64>,
    clicks: &[crate::urlintel::EmailClicks],
    strategy: crate::urlintel::ClickStrategy,
    min_clicks: u64,
    labels: &[String],
) -> Design {
    let by_email: std::collections::BTreeMap<&str, &crate::llda::CognitiveProfile> =
        profiles.iter().map(|p| (p.email_id.as_str(), p)).collect();
    let mut email_ids = Vec::new();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    let mut regressors: Vec<String> = labels.to_vec();
    regressors.push("SpoofDist".to_string());
    for ec in clicks {
        let Some(profile) = by_email.get(ec.email_id.as_str()) else {
            continue;
        };
        let value = ec.by_strategy(strategy);
        let rounded = (value + 0.5).floor().max(0.0) as u64;
        if rounded < min_clicks {
            continue;
        }
        let mut row: Vec<f64> = profile.trigger_counts.iter().map(|c| *c as f64).collect();
        row.push(spoof.get(ec.email_id.as_str()).copied().unwrap_or(0.0));
        email_ids.push(ec.email_id.clone());
        y.push(rounded);
        rows.push(row);
    }
    Design::new(email_ids, y, &regressors, rows)
}

pub fn write_design_csv(design: &Design, path: &std::path::Path) -> Result<(), FitError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| FitError::Csv(e.to_string()))?;
    let mut header = vec!["email_id".to_string(), "clicks".to_string()];
    header.extend(design.columns.iter().skip(1).cloned());
    w.write_record(&header).map_err(|e| FitError::Csv(e.to_string()))?;
    for i in 0..design.n() {
        let mut rec = vec![design.email_ids[i].clone(), design.y[i].to_string()];
        rec.extend(design.x[i].iter().skip(1).map(|v| format!("{v}")));
        w.write_record(&rec).map_err(|e| FitError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| FitError::Csv(e.to_string()))
}

pub fn read_design_csv(path: &std::path::Path) -> Result<Design, FitError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| FitError::Csv(e.to_string()))?;
    let headers = r
        .headers()
        .map_err(|e| FitError::Csv(e.to_string()))?
        .clone();
    let regressors: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let mut email_ids = Vec::new();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| FitError::Csv(e.to_string()))?;
        email_ids.push(rec[0].to_string());
        y.push(
            rec[1]
                .parse::<u64>()
                .map_err(|e| FitError::Csv(format!("bad clicks value '{}': {e}", &rec[1])))?,
        );
        let row: Result<Vec<f64>, _> = rec.iter().skip(2).map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| FitError::Csv(format!("bad regressor value: {e}")))?);
    }
    Ok(Design::new(email_ids, y, &regressors, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_only(y: &[u64]) -> Design {
        Design::new(
            (0..y.len()).map(|i| format!("e{i}")).collect(),
            y.to_vec(),
            &[],
            vec![vec![]; y.len()],
        )
    }

    #[test]
    fn intercept_only_mle_is_log_mean() {
        let fit = fit_poisson(&intercept_only(&[5, 5, 5, 5])).unwrap();
        assert!((fit.coef[0] - 5.0f64.ln()).abs() < 1e-10);
        assert!(fit.deviance.abs() < 1e-10);
        assert!(fit.converged);
        // null model: adjusted pseudo-R2 is <= 0 (the parameter penalty)
        assert!(fit.adj_mcfadden_r2 <= 0.0 + 1e-12);
    }

    fn synthetic(alpha: f64, beta: f64, n: usize, seed: u64) -> Design {
        use rand::Rng;
        use rand_distr::{Distribution, Poisson};
        let mut rng = crate::rng::stream_rng(seed, 0);
        let mut ids = Vec::new();
        let mut y = Vec::new();
        let mut rows = Vec::new();
        for i in 0..n {
            let x = rng.random_range(0.0..40.0f64).floor();
            let rate = (alpha + beta * x).exp();
            let draw = Poisson::new(rate.max(1e-9)).unwrap().sample(&mut rng);
            ids.push(format!("e{i}"));
            y.push(draw as u64);
            rows.push(vec![x]);
        }
        Design::new(ids, y, &["x".to_string()], rows)
    }

    #[test]
    fn recovers_synthetic_coefficients_within_three_se() {
        let design = synthetic(1.0, 0.02, 500, 99);
        let fit = fit_poisson(&design).unwrap();
        assert!(fit.converged);
        assert!(
            (fit.coef[0] - 1.0).abs() <= 3.0 * fit.se[0],
            "alpha {} +- {}",
            fit.coef[0],
            fit.se[0]
        );
        assert!(
            (fit.coef[1] - 0.02).abs() <= 3.0 * fit.se[1],
            "beta {} +- {}",
            fit.coef[1],
            fit.se[1]
        );
    }

    /// Independent coarse grid-search oracle over (alpha, beta): the IRLS
    /// optimum must dominate every grid point's likelihood.
    #[test]
    fn irls_beats_grid_search_oracle() {
        let design = synthetic(1.0, 0.02, 300, 7);
        let fit = fit_poisson(&design).unwrap();
        let loglik_at = |a: f64, b: f64| {
            let mu: Vec<f64> = design
                .x
                .iter()
                .map(|row| (a + b * row[1]).exp())
                .collect();
            poisson_loglik(&design.y, &mu)
        };
        let mut best = f64::NEG_INFINITY;
        let mut arg = (0.0, 0.0);
        for ai in 0..=60 {
            for bi in 0..=60 {
                let a = 0.5 + ai as f64 * 0.02; // [0.5, 1.7]
                let b = -0.01 + bi as f64 * 0.001; // [-0.01, 0.05]
                let ll = loglik_at(a, b);
                if ll > best {
                    best = ll;
                    arg = (a, b);
                }
            }
        }
        assert!(
            fit.loglik >= best - 1e-6,
            "IRLS loglik {} below grid best {} at {:?}",
            fit.loglik,
            best,
            arg
        );
        assert!((fit.coef[0] - arg.0).abs() < 0.05);
        assert!((fit.coef[1] - arg.1).abs() < 0.005);
    }

    #[test]
    fn rank_deficient_design_names_collinear_columns() {
        // x2 = 2 * x1 exactly
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, 2.0 * i as f64])
            .collect();
        let design = Design::new(
            (0..20).map(|i| format!("e{i}")).collect(),
            (0..20).map(|i| (i + 1) as u64).collect(),
            &["x1".to_string(), "x2".to_string()],
            rows,
        );
        match fit_poisson(&design) {
            Err(FitError::RankDeficient(cols)) => {
                assert!(cols.iter().any(|c| c == "x1" || c == "x2"), "{cols:?}");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let design = synthetic(1.0, 0.0, 1, 3);
        assert!(matches!(
            fit_poisson(&design),
            Err(FitError::TooFewRows { .. })
        ));
    }

    fn seven_column_design(n: usize, seed: u64) -> Design {
        use rand::Rng;
        use rand_distr::{Distribution, Poisson};
        let mut rng = crate::rng::stream_rng(seed, 1);
        let betas = [-0.02, 0.02, 0.1, 0.01, 0.02, -0.02, -0.1];
        let mut ids = Vec::new();
        let mut y = Vec::new();
        let mut rows = Vec::new();
        for i in 0..n {
            let row: Vec<f64> = (0..7)
                .map(|c| {
                    if c == 6 {
                        rng.random_range(0.0..15.0f64).floor()
                    } else {
                        rng.random_range(0.0..20.0f64).floor()
                    }
                })
                .collect();
            let eta: f64 =
                4.0 + row.iter().zip(&betas).map(|(x, b)| x * b).sum::<f64>();
            let draw = Poisson::new(eta.exp().clamp(1e-9, 1e7)).unwrap().sample(&mut rng);
            ids.push(format!("e{i}"));
            y.push(draw as u64);
            rows.push(row);
        }
        let names: Vec<String> = REGRESSORS.iter().map(|s| s.to_string()).collect();
        Design::new(ids, y, &names, rows)
    }

    #[test]
    fn stepwise_produces_nested_fits_with_monotone_deviance() {
        let design = seven_column_design(80, 5);
        let fits = stepwise(&design, &STEPWISE_ORDER).unwrap();
        assert_eq!(fits.len(), 7);
        for (i, fit) in fits.iter().enumerate() {
            assert_eq!(fit.names.len(), i + 2); // alpha + i+1 regressors
        }
        for w in fits.windows(2) {
            assert!(
                w[1].deviance <= w[0].deviance + 1e-6,
                "deviance must not increase in nested fits"
            );
        }
    }

    #[test]
    fn anova_identical_models_give_zero_statistic() {
        let design = seven_column_design(60, 9);
        let m1 = fit_poisson(&design.select(&["Reciprocity"]).unwrap()).unwrap();
        let (stat, df, p) = anova_chisq(&m1, &m1).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(df, 0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn anova_reference_p_values() {
        // p at the canonical chi-square points, df 1
        assert!((chi2_sf(6.63, 1) - 0.01).abs() < 5e-4);
        assert!((chi2_sf(10.83, 1) - 0.001).abs() < 5e-4);
    }

    #[test]
    fn anova_rejects_non_nested_models() {
        let design = seven_column_design(60, 9);
        let a = fit_poisson(&design.select(&["Reciprocity"]).unwrap()).unwrap();
        let b = fit_poisson(&design.select(&["Consistency"]).unwrap()).unwrap();
        assert!(matches!(anova_chisq(&a, &b), Err(FitError::NotNested)));
    }

    #[test]
    fn design_csv_round_trips() {
        let design = seven_column_design(25, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("design.csv");
        write_design_csv(&design, &path).unwrap();
        let back = read_design_csv(&path).unwrap();
        assert_eq!(design, back);
    }
}

//! Case-resampling bootstrap for the Poisson coefficients.
//!
//! Rows are drawn with replacement (full sample size) and refit; replicates
//! that fail to converge are dropped and counted, never retried, so a fixed
//! seed reproduces the draw matrix bit for bit.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::quantile_sorted;
use super::{fit_poisson, Design, FitError};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefQuantiles {
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

/// Bootstrap coefficient draws plus their percentile summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapFit {
    /// Coefficient names, intercept first.
    pub names: Vec<String>,
    /// Kept replicates, one coefficient vector per row.
    pub draws: Vec<Vec<f64>>,
    pub quantiles: Vec<CoefQuantiles>,
    pub b_requested: usize,
    pub dropped: usize,
    pub seed: u64,
    pub warning: Option<String>,
}

impl BootstrapFit {
    /// Wrap an explicit draw matrix (pinned coefficients, degenerate
    /// single-draw cases); quantiles are recomputed by the inclusive
    /// empirical method.
    pub fn from_draws(
        names: Vec<String>,
        draws: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self, FitError> {
        if draws.is_empty() {
            return Err(FitError::EmptyDraws);
        }
        let quantiles = quantiles_of(&names, &draws);
        Ok(BootstrapFit {
            b_requested: draws.len(),
            dropped: 0,
            names,
            draws,
            quantiles,
            seed,
            warning: None,
        })
    }

    pub fn regressor_names(&self) -> Vec<String> {
        self.names.iter().skip(1).cloned().collect()
    }
}

fn quantiles_of(names: &[String], draws: &[Vec<f64>]) -> Vec<CoefQuantiles> {
    (0..names.len())
        .map(|c| {
            let mut column: Vec<f64> = draws.iter().map(|d| d[c]).collect();
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            CoefQuantiles {
                q025: quantile_sorted(&column, 0.025),
                q50: quantile_sorted(&column, 0.5),
                q975: quantile_sorted(&column, 0.975),
            }
        })
        .collect()
}

/// `b` case-resampled refits of `design`. Errors when fewer than 100
/// replicates are requested; attaches a warning when more than 20% of the
/// replicates had to be dropped.
pub fn bootstrap_fit(design: &Design, b: usize, seed: u64) -> Result<BootstrapFit, FitError> {
    if b < 100 {
        return Err(FitError::TooFewReplicates(b));
    }
    let n = design.n();
    let replicates: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let resampled = Design {
                email_ids: idx.iter().map(|i| design.email_ids[*i].clone()).collect(),
                y: idx.iter().map(|i| design.y[*i]).collect(),
                columns: design.columns.clone(),
                x: idx.iter().map(|i| design.x[*i].clone()).collect(),
            };
            match fit_poisson(&resampled) {
                Ok(fit) if fit.converged => Some(fit.coef),
                _ => None,
            }
        })
        .collect();

    let dropped = replicates.iter().filter(|r| r.is_none()).count();
    let draws: Vec<Vec<f64>> = replicates.into_iter().flatten().collect();
    if draws.is_empty() {
        return Err(FitError::EmptyDraws);
    }
    let warning = (dropped * 5 > b).then(|| {
        format!(
            "{dropped} of {b} bootstrap replicates failed to converge and were dropped"
        )
    });
    let quantiles = quantiles_of(&design.columns, &draws);
    Ok(BootstrapFit {
        names: design.columns.clone(),
        draws,
        quantiles,
        b_requested: b,
        dropped,
        seed,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::Design;

    fn constant_design(value: u64, n: usize) -> Design {
        Design::new(
            (0..n).map(|i| format!("e{i}")).collect(),
            vec![value; n],
            &["x".to_string()],
            (0..n).map(|i| vec![(i % 7) as f64]).collect(),
        )
    }

    #[test]
    fn constant_y_draws_collapse_to_log_y() {
        let design = constant_design(20, 40);
        let bf = bootstrap_fit(&design, 150, 11).unwrap();
        assert_eq!(bf.dropped, 0);
        let ln20 = 20.0f64.ln();
        for draw in &bf.draws {
            assert!((draw[0] - ln20).abs() < 1e-6, "alpha {}", draw[0]);
            assert!(draw[1].abs() < 1e-6, "slope {}", draw[1]);
        }
        assert!((bf.quantiles[0].q50 - ln20).abs() < 1e-6);
    }

    #[test]
    fn bootstrap_is_bit_reproducible() {
        let design = constant_design(15, 30);
        let a = bootstrap_fit(&design, 120, 5).unwrap();
        let b = bootstrap_fit(&design, 120, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_replicates_rejected() {
        let design = constant_design(15, 30);
        assert!(matches!(
            bootstrap_fit(&design, 99, 5),
            Err(FitError::TooFewReplicates(99))
        ));
    }

    #[test]
    fn single_pinned_draw_gives_degenerate_quantiles() {
        let bf = BootstrapFit::from_draws(
            vec!["alpha".into(), "x".into()],
            vec![vec![4.35, -0.09]],
            0,
        )
        .unwrap();
        assert_eq!(bf.quantiles[0].q025, 4.35);
        assert_eq!(bf.quantiles[0].q50, 4.35);
        assert_eq!(bf.quantiles[0].q975, 4.35);
    }

    #[test]
    fn quantiles_are_ordered() {
        let design = constant_design(25, 50);
        let bf = bootstrap_fit(&design, 200, 3).unwrap();
        for q in &bf.quantiles {
            assert!(q.q025 <= q.q50 && q.q50 <= q.q975);
        }
    }
}

//! Click prediction from bootstrap draws and triage ranking.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::quantile_sorted;
use super::{BootstrapFit, FitError};
use crate::llda::CognitiveProfile;
use crate::rng::stream_rng;

/// The two prediction models: a reduced set of clearly-signed regressors,
/// and the full seven-regressor model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionModel {
    PM1,
    PM2,
}

impl PredictionModel {
    pub fn regressors(&self) -> Vec<&'static str> {
        match self {
            PredictionModel::PM1 => vec!["Reciprocity", "Consistency", "Scarcity", "SpoofDist"],
            PredictionModel::PM2 => vec![
                "Reciprocity",
                "Consistency",
                "SocialProof",
                "Authority",
                "Liking",
                "Scarcity",
                "SpoofDist",
            ],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PredictionModel::PM1 => "PM1",
            PredictionModel::PM2 => "PM2",
        }
    }
}

impl std::str::FromStr for PredictionModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PM1" | "pm1" => Ok(PredictionModel::PM1),
            "PM2" | "pm2" => Ok(PredictionModel::PM2),
            other => Err(format!("unknown prediction model '{other}'")),
        }
    }
}

/// Training-set mean and sd of one regressor (backs the in-domain rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

/// Predicted click count with bootstrap percentile interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageScore {
    pub email_id: String,
    pub predicted_clicks_mean: f64,
    pub predicted_clicks_q025: f64,
    pub predicted_clicks_q50: f64,
    pub predicted_clicks_q975: f64,
    pub model_id: PredictionModel,
    /// All regressors within one training sd of the training mean.
    /// Out-of-domain emails stay in the output, flagged.
    pub in_domain: bool,
}

/// Simulate predicted clicks for each email by sampling coefficient rows
/// from the bootstrap draws (uniform with replacement, `draws` times) and
/// pushing the email's regressors through `exp(x . beta)`.
pub fn predict_clicks(
    bf: &BootstrapFit,
    profiles: &[(CognitiveProfile, f64)],
    labels: &[String],
    model: PredictionModel,
    draws: usize,
    seed: u64,
    training_stats: &[RegressorStats],
) -> Result<Vec<TriageScore>, FitError> {
    if draws == 0 {
        return Err(FitError::NoPredictionDraws);
    }
    if bf.draws.is_empty() {
        return Err(FitError::EmptyDraws);
    }
    let expected: Vec<String> = model.regressors().iter().map(|s| s.to_string()).collect();
    if bf.regressor_names() != expected {
        return Err(FitError::RegressorMismatch {
            bootstrap: bf.regressor_names(),
            model: expected,
        });
    }

    // Regressor extraction order follows the bootstrap coefficient order.
    let extract: Vec<Box<dyn Fn(&CognitiveProfile, f64) -> f64 + Sync>> = bf
        .names
        .iter()
        .skip(1)
        .map(|name| -> Box<dyn Fn(&CognitiveProfile, f64) -> f64 + Sync> {
            if name == "SpoofDist" {
                Box::new(|_, spoof| spoof)
            } else {
                let idx = labels.iter().position(|l| l == name);
                match idx {
                    Some(i) => Box::new(move |p, _| p.trigger_counts[i] as f64),
                    None => Box::new(|_, _| 0.0),
                }
            }
        })
        .collect();

    // One shared sample of coefficient rows for the whole cohort.
    let mut rng = stream_rng(seed, 0);
    let sampled: Vec<&Vec<f64>> = (0..draws)
        .map(|_| &bf.draws[rng.random_range(0..bf.draws.len())])
        .collect();

    let stats_of = |name: &str| training_stats.iter().find(|s| s.name == name);

    let scores: Vec<TriageScore> = profiles
        .par_iter()
        .map(|(profile, spoof)| {
            let x: Vec<f64> = extract.iter().map(|f| f(profile, *spoof)).collect();
            let mut values: Vec<f64> = sampled
                .iter()
                .map(|coef| {
                    let eta: f64 = coef[0]
                        + coef[1..]
                            .iter()
                            .zip(&x)
                            .map(|(b, v)| b * v)
                            .sum::<f64>();
                    eta.clamp(-30.0, 30.0).exp()
                })
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let in_domain = bf.names.iter().skip(1).zip(&x).all(|(name, v)| {
                match stats_of(name) {
                    Some(s) => (v - s.mean).abs() <= s.sd,
                    None => false,
                }
            });
            TriageScore {
                email_id: profile.email_id.clone(),
                predicted_clicks_mean: mean,
                predicted_clicks_q025: quantile_sorted(&values, 0.025),
                predicted_clicks_q50: quantile_sorted(&values, 0.5),
                predicted_clicks_q975: quantile_sorted(&values, 0.975),
                model_id: model,
                in_domain,
            }
        })
        .collect();
    Ok(scores)
}

/// Order the triage queue: descending median predicted clicks, ties broken
/// by mean then email id. Stable and total.
pub fn triage_rank(mut scores: Vec<TriageScore>) -> Vec<TriageScore> {
    scores.sort_by(|a, b| {
        b.predicted_clicks_q50
            .partial_cmp(&a.predicted_clicks_q50)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                b.predicted_clicks_mean
                    .partial_cmp(&a.predicted_clicks_mean)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then_with(|| a.email_id.cmp(&b.email_id))
    });
    scores
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(id: &str, counts: &[u32]) -> CognitiveProfile {
        CognitiveProfile {
            email_id: id.into(),
            trigger_counts: counts.to_vec(),
            label_probs: vec![1.0 / counts.len() as f64; counts.len()],
            vulns_present: vec![false; counts.len()],
            no_signal: false,
        }
    }

    fn labels() -> Vec<String> {
        crate::llda::default_labels()
    }

    fn pm1_names() -> Vec<String> {
        let mut names = vec!["alpha".to_string()];
        names.extend(
            PredictionModel::PM1
                .regressors()
                .iter()
                .map(|s| s.to_string()),
        );
        names
    }

    fn stats_zero() -> Vec<RegressorStats> {
        PredictionModel::PM1
            .regressors()
            .iter()
            .map(|name| RegressorStats {
                name: name.to_string(),
                mean: 0.0,
                sd: 10.0,
            })
            .collect()
    }

    // Draws pinned to the published medians: an all-zero-regressor email
    // must score exp(4.35) = 77.48 +- 0.01.
    #[test]
    fn pinned_median_draws_give_exp_alpha() {
        let bf = BootstrapFit::from_draws(
            pm1_names(),
            vec![vec![4.35, -0.01, 0.01, 0.02, -0.09]],
            0,
        )
        .unwrap();
        let profiles = vec![(profile("zero", &[0, 0, 0, 0, 0, 0]), 0.0)];
        let scores = predict_clicks(
            &bf,
            &profiles,
            &labels(),
            PredictionModel::PM1,
            1000,
            1,
            &stats_zero(),
        )
        .unwrap();
        let expected = 4.35f64.exp();
        assert!((expected - 77.478_40).abs() < 0.01);
        let s = &scores[0];
        assert!((s.predicted_clicks_mean - expected).abs() < 0.01);
        assert_eq!(s.predicted_clicks_q025, s.predicted_clicks_q975);
        assert!((s.predicted_clicks_q50 - expected).abs() < 0.01);
        assert!(s.in_domain);
    }

    #[test]
    fn monotone_in_scarcity_under_positive_median_draws() {
        let bf = BootstrapFit::from_draws(
            pm1_names(),
            vec![vec![4.0, -0.01, 0.01, 0.02, -0.09]],
            0,
        )
        .unwrap();
        let mut low = [0u32; 6];
        let mut high = [0u32; 6];
        low[5] = 3; // Scarcity
        high[5] = 4;
        let profiles = vec![
            (profile("low", &low), 0.0),
            (profile("high", &high), 0.0),
        ];
        let scores = predict_clicks(
            &bf,
            &profiles,
            &labels(),
            PredictionModel::PM1,
            500,
            1,
            &stats_zero(),
        )
        .unwrap();
        assert!(scores[1].predicted_clicks_q50 > scores[0].predicted_clicks_q50);
    }

    #[test]
    fn out_of_domain_emails_are_flagged_but_scored() {
        let bf = BootstrapFit::from_draws(
            pm1_names(),
            vec![vec![4.0, -0.01, 0.01, 0.02, -0.09]],
            0,
        )
        .unwrap();
        let stats: Vec<RegressorStats> = PredictionModel::PM1
            .regressors()
            .iter()
            .map(|name| RegressorStats {
                name: name.to_string(),
                mean: 2.0,
                sd: 1.0,
            })
            .collect();
        let mut wild = [0u32; 6];
        wild[0] = 50; // far outside mean 2 +- 1
        let profiles = vec![(profile("wild", &wild), 2.0)];
        let scores = predict_clicks(
            &bf,
            &profiles,
            &labels(),
            PredictionModel::PM1,
            100,
            1,
            &stats,
        )
        .unwrap();
        assert!(!scores[0].in_domain);
        assert!(scores[0].predicted_clicks_mean.is_finite());
    }

    #[test]
    fn mismatched_regressors_are_rejected() {
        let bf = BootstrapFit::from_draws(
            vec!["alpha".into(), "Consistency".into()],
            vec![vec![4.0, 0.01]],
            0,
        )
        .unwrap();
        let profiles = vec![(profile("e", &[0; 6]), 0.0)];
        assert!(matches!(
            predict_clicks(
                &bf,
                &profiles,
                &labels(),
                PredictionModel::PM1,
                10,
                1,
                &stats_zero()
            ),
            Err(FitError::RegressorMismatch { .. })
        ));
    }

    fn score(id: &str, q50: f64, mean: f64) -> TriageScore {
        TriageScore {
            email_id: id.into(),
            predicted_clicks_mean: mean,
            predicted_clicks_q025: q50 * 0.5,
            predicted_clicks_q50: q50,
            predicted_clicks_q975: q50 * 2.0,
            model_id: PredictionModel::PM1,
            in_domain: true,
        }
    }

    #[test]
    fn rank_orders_by_median_then_mean_then_id() {
        let ranked = triage_rank(vec![
            score("b", 10.0, 12.0),
            score("a", 80.0, 80.0),
            score("d", 10.0, 15.0),
            score("c", 10.0, 15.0),
        ]);
        let ids: Vec<&str> = ranked.iter().map(|s| s.email_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c", "d", "b"]);
    }
}

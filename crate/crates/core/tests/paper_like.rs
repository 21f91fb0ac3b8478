//! Fixture-regression expectations on "paper-like" synthetic corpora: the
//! generating models are parameterized to the published reference values,
//! and fitting must recover their structure (signs, medians within stated
//! tolerances, correlation strengths, pseudo-R2 improvement).

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use triage_core::app::{report_stats, synth_corpus, SynthSpec};
use triage_core::econometrics::{
    bootstrap_fit, fit_poisson, stepwise, Design, PredictionModel, STEPWISE_ORDER,
};
use triage_core::llda::CognitiveProfile;
use triage_core::rng::stream_rng;

/// Design rows straight from the synthetic ground truth (no inference
/// noise): clicked emails with at least 10 clicks.
fn truth_design(spec: &SynthSpec, seed: u64) -> Design {
    let dir = tempfile::tempdir().unwrap();
    let out = synth_corpus(spec, seed, dir.path()).unwrap();
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for t in &out.truth.emails {
        if !t.clicked || t.clicks < 10 {
            continue;
        }
        ids.push(t.id.clone());
        y.push(t.clicks);
        let mut row: Vec<f64> = t.trigger_counts.iter().map(|c| *c as f64).collect();
        row.push(t.spoof_dist as f64);
        rows.push(row);
    }
    let mut names: Vec<String> = spec.labels.clone();
    names.push("SpoofDist".to_string());
    Design::new(ids, y, &names, rows)
}

// The full seven-regressor model on a corpus generated with negative
// Reciprocity and SpoofDist effects and positive Consistency and Scarcity
// effects must recover that sign pattern.
#[test]
fn m7_recovers_the_generating_sign_pattern() {
    let spec = SynthSpec {
        n_emails: 800,
        n_families: 80,
        clicked_fraction: 0.5,
        true_alpha: 3.2,
        true_beta: vec![-0.02, 0.02, 0.0, 0.01, 0.0, 0.02, -0.1],
        ..SynthSpec::default()
    };
    let design = truth_design(&spec, 41);
    assert!(design.n() > 100, "only {} rows", design.n());
    let fits = stepwise(&design, &STEPWISE_ORDER).unwrap();
    let m7 = fits.last().unwrap();
    assert!(m7.converged);
    assert!(m7.coef_by_name("Reciprocity").unwrap() < 0.0);
    assert!(m7.coef_by_name("Consistency").unwrap() > 0.0);
    assert!(m7.coef_by_name("Scarcity").unwrap() > 0.0);
    assert!(m7.coef_by_name("SpoofDist").unwrap() < 0.0);
}

// Explanatory power must grow along the stepwise ladder on the paper-like
// corpus (the published trajectory rises from M1 to M7).
#[test]
fn stepwise_pseudo_r2_improves_from_m1_to_m7() {
    let spec = SynthSpec {
        n_emails: 600,
        n_families: 60,
        clicked_fraction: 0.5,
        ..SynthSpec::default()
    };
    let design = truth_design(&spec, 17);
    let fits = stepwise(&design, &STEPWISE_ORDER).unwrap();
    let m1 = &fits[0];
    let m7 = &fits[6];
    assert!(
        m7.adj_mcfadden_r2 > m1.adj_mcfadden_r2,
        "adj pseudo-R2 did not improve: M1 {} vs M7 {}",
        m1.adj_mcfadden_r2,
        m7.adj_mcfadden_r2
    );
    assert!(m7.deviance < m1.deviance);
}

// A world generated from the PM1 reference medians (alpha 4.35, slopes
// -0.01 / 0.01 / 0.02 / -0.09) must come back from the bootstrap with
// median coefficients within +-0.5 on alpha and +-0.03 on slopes.
#[test]
fn pm1_bootstrap_medians_recover_generating_coefficients() {
    let true_coef = [4.35, -0.01, 0.01, 0.02, -0.09];
    let mut rng = stream_rng(88, 0);
    let n = 400;
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n {
        let recip = rng.random_range(0..=20) as f64;
        let cons = rng.random_range(0..=50) as f64;
        let scar = rng.random_range(0..=50) as f64;
        let spoof = rng.random_range(0..=12) as f64;
        let eta = true_coef[0]
            + true_coef[1] * recip
            + true_coef[2] * cons
            + true_coef[3] * scar
            + true_coef[4] * spoof;
        let rate = eta.clamp(-20.0, 20.0).exp();
        ids.push(format!("e{i}"));
        y.push(Poisson::new(rate.max(1e-9)).unwrap().sample(&mut rng) as u64);
        rows.push(vec![recip, cons, scar, spoof]);
    }
    let names: Vec<String> = PredictionModel::PM1
        .regressors()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let design = Design::new(ids, y, &names, rows);
    let boot = bootstrap_fit(&design, 1000, 5).unwrap();
    let medians: Vec<f64> = boot.quantiles.iter().map(|q| q.q50).collect();
    assert!(
        (medians[0] - true_coef[0]).abs() <= 0.5,
        "alpha median {} vs {}",
        medians[0],
        true_coef[0]
    );
    for i in 1..5 {
        assert!(
            (medians[i] - true_coef[i]).abs() <= 0.03,
            "{} median {} vs {}",
            boot.names[i],
            medians[i],
            true_coef[i]
        );
    }
    // the point fit agrees as well
    let fit = fit_poisson(&design).unwrap();
    assert!(fit.converged);
    assert!((fit.coef[0] - true_coef[0]).abs() <= 0.5);
}

// Regressor correlation matrix: construct a cohort whose Scarcity and
// SocialProof counts correlate near 0.50 and whose Liking count correlates
// near 0.57 with the spoof distance; the report must recover both within
// +-0.15.
#[test]
fn correlation_matrix_recovers_constructed_correlations() {
    let labels = triage_core::llda::default_labels();
    let mut rng = stream_rng(55, 0);
    let n = 600;
    let mut profiles = Vec::with_capacity(n);
    let mut spoofs = BTreeMap::new();
    let mix = |rho: f64, x_std: f64, rng: &mut rand_chacha::ChaCha8Rng| {
        let noise: f64 = rng.random_range(-1.7320508f64..1.7320508); // unit variance
        rho * x_std + (1.0 - rho * rho).sqrt() * noise
    };
    for i in 0..n {
        let scarcity = rng.random_range(0..=40u32);
        let scar_std = (scarcity as f64 - 20.0) / 11.83; // uniform(0..40) sd
        let socialproof =
            ((mix(0.50, scar_std, &mut rng) * 4.0) + 8.0).round().max(0.0) as u32;
        let spoof = rng.random_range(0..=12u32);
        let spoof_std = (spoof as f64 - 6.0) / 3.75;
        let liking = ((mix(0.57, spoof_std, &mut rng) * 3.0) + 6.0).round().max(0.0) as u32;
        let counts = vec![
            rng.random_range(0..=15u32), // Reciprocity
            rng.random_range(0..=30u32), // Consistency
            socialproof,
            rng.random_range(0..=12u32), // Authority
            liking,
            scarcity,
        ];
        let id = format!("e{i:04}");
        spoofs.insert(id.clone(), spoof as f64);
        profiles.push(CognitiveProfile {
            email_id: id,
            trigger_counts: counts,
            label_probs: vec![1.0 / 6.0; 6],
            vulns_present: vec![false; 6],
            no_signal: false,
        });
    }
    let bundle = report_stats(&[], &[], &profiles, &[], &spoofs, &labels, 2.0);
    let names = &bundle.regressor_correlation.names;
    let at = |a: &str, b: &str| {
        let i = names.iter().position(|n| n == a).unwrap();
        let j = names.iter().position(|n| n == b).unwrap();
        bundle.regressor_correlation.values[i][j]
    };
    let sc_sp = at("Scarcity", "SocialProof");
    let lik_spoof = at("Liking", "SpoofDist");
    assert!(
        (sc_sp - 0.50).abs() <= 0.15,
        "Scarcity-SocialProof correlation {sc_sp}"
    );
    assert!(
        (lik_spoof - 0.57).abs() <= 0.15,
        "Liking-SpoofDist correlation {lik_spoof}"
    );
    // matrix is symmetric with unit diagonal
    for i in 0..names.len() {
        assert_eq!(bundle.regressor_correlation.values[i][i], 1.0);
        for j in 0..names.len() {
            let a = bundle.regressor_correlation.values[i][j];
            let b = bundle.regressor_correlation.values[j][i];
            if !a.is_nan() {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

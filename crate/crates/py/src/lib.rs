//! Python bindings for the triage pipeline.
//!
//! Exposes the text primitives, the labeled topic model, Poisson
//! fitting/bootstrap/prediction, and the end-to-end pipeline runner.
//!
//! ```python
//! import triage_py as tp
//!
//! tokens = tp.clean_and_tokenize("Click http://x.y NOW!!")
//! d = tp.levenshtein("0rg.com", "org.com")
//! model = tp.LldaModel.train(docs, labels, seed=7)
//! probs, counts = model.infer(tokens)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use triage_core::econometrics::{self, Design};
use triage_core::llda;
use triage_core::textproc::{self, TextConfig, TokenDoc, Tokenizer, Vocabulary};
use triage_core::urlintel;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Clean and tokenize an email body.
#[pyfunction]
#[pyo3(signature = (body, stemmer = "english"))]
fn clean_and_tokenize(body: &str, stemmer: &str) -> PyResult<Vec<String>> {
    let tokenizer =
        Tokenizer::new(TextConfig::default().with_stemmer(stemmer)).map_err(value_err)?;
    Ok(tokenizer.clean_and_tokenize("doc", body).tokens)
}

/// Levenshtein edit distance between two strings.
#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    textproc::levenshtein(a, b)
}

/// Spoof distance of a From: domain against the organization name.
#[pyfunction]
fn spoof_distance(from_domain: &str, org_name: &str) -> usize {
    urlintel::spoof_distance(from_domain, org_name)
}

/// Cosine similarity between two token lists (L2-normalized bag of words).
#[pyfunction]
fn cosine(a: Vec<String>, b: Vec<String>) -> f64 {
    let da = TokenDoc {
        email_id: "a".into(),
        tokens: a,
    };
    let db = TokenDoc {
        email_id: "b".into(),
        tokens: b,
    };
    let vocab = Vocabulary::build([&da, &db]);
    textproc::cosine(
        &textproc::tf_vector(&da, &vocab, true),
        &textproc::tf_vector(&db, &vocab, true),
    )
}

/// Upper-tail chi-square probability.
#[pyfunction]
fn chi2_sf(x: f64, df: usize) -> f64 {
    econometrics::stats::chi2_sf(x, df)
}

/// PROPORTIONAL rank cutoff: ceil(n_test / n_train * n_train_pos).
#[pyfunction]
fn proportional_topn(n_train: usize, n_test: usize, n_train_pos: usize) -> usize {
    llda::topn(n_train, n_test, n_train_pos)
}

/// Trained labeled topic model.
#[pyclass]
struct LldaModel {
    inner: llda::LldaModel,
}

#[pymethods]
impl LldaModel {
    /// Train from `{doc_id: [tokens]}` and `{doc_id: [labels]}`.
    #[staticmethod]
    #[pyo3(signature = (docs, labels, alpha = 1.0, beta = 0.001, iterations = 1000, seed = 0))]
    fn train(
        docs: BTreeMap<String, Vec<String>>,
        labels: BTreeMap<String, Vec<String>>,
        alpha: f64,
        beta: f64,
        iterations: u32,
        seed: u64,
    ) -> PyResult<Self> {
        let token_docs: Vec<TokenDoc> = docs
            .into_iter()
            .map(|(email_id, tokens)| TokenDoc { email_id, tokens })
            .collect();
        let label_map: BTreeMap<String, BTreeSet<String>> = labels
            .into_iter()
            .map(|(id, ls)| (id, ls.into_iter().collect()))
            .collect();
        let cfg = llda::LldaConfig {
            alpha,
            beta,
            n_iterations: iterations,
            burn_in: iterations.saturating_sub(1),
            average_last: 0,
            seed,
            labels: llda::default_labels(),
        };
        let inner = llda::train(&token_docs, &label_map, &cfg).map_err(value_err)?;
        Ok(LldaModel { inner })
    }

    /// Label probabilities and trigger counts for a token list.
    #[pyo3(signature = (tokens, iterations = 200, seed = 0))]
    fn infer(
        &self,
        tokens: Vec<String>,
        iterations: u32,
        seed: u64,
    ) -> (BTreeMap<String, f64>, BTreeMap<String, u32>) {
        let cfg = llda::LldaConfig {
            n_iterations: iterations,
            seed,
            ..self.inner.config.clone()
        };
        let doc = TokenDoc {
            email_id: "doc".into(),
            tokens,
        };
        let profile = llda::infer(&self.inner, &doc, &cfg);
        let labels = &self.inner.config.labels;
        (
            labels
                .iter()
                .cloned()
                .zip(profile.label_probs.iter().copied())
                .collect(),
            labels
                .iter()
                .cloned()
                .zip(profile.trigger_counts.iter().copied())
                .collect(),
        )
    }

    /// Top keywords with phi weights for one label.
    #[pyo3(signature = (label, n = 10))]
    fn top_words(&self, label: &str, n: usize) -> PyResult<Vec<(String, f64)>> {
        let idx = self
            .inner
            .config
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| PyValueError::new_err(format!("unknown label '{label}'")))?;
        Ok(self.inner.top_words(idx, n))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner
            .save(&path)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(LldaModel {
            inner: llda::LldaModel::load(&path).map_err(|e| PyIOError::new_err(e.to_string()))?,
        })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.config.labels.clone()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab.len()
    }
}

fn design_from(y: Vec<u64>, x: Vec<Vec<f64>>, names: Vec<String>) -> PyResult<Design> {
    if y.len() != x.len() {
        return Err(PyValueError::new_err("y and x must have the same length"));
    }
    Ok(Design::new(
        (0..y.len()).map(|i| format!("row{i}")).collect(),
        y,
        &names,
        x,
    ))
}

/// Fit a Poisson GLM (log link) by IRLS. Returns a dict with coefficients,
/// standard errors, and fit diagnostics.
#[pyfunction]
fn fit_poisson(
    py: Python<'_>,
    y: Vec<u64>,
    x: Vec<Vec<f64>>,
    names: Vec<String>,
) -> PyResult<Py<PyDict>> {
    let fit = econometrics::fit_poisson(&design_from(y, x, names)?).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("names", &fit.names)?;
    out.set_item("coef", &fit.coef)?;
    out.set_item("se", &fit.se)?;
    out.set_item("loglik", fit.loglik)?;
    out.set_item("deviance", fit.deviance)?;
    out.set_item("adj_mcfadden_r2", fit.adj_mcfadden_r2)?;
    out.set_item("converged", fit.converged)?;
    Ok(out.into())
}

/// Case-resampling bootstrap of the Poisson coefficients; returns the
/// percentile quantiles per coefficient.
#[pyfunction]
#[pyo3(signature = (y, x, names, b = 1000, seed = 0))]
fn bootstrap_poisson(
    py: Python<'_>,
    y: Vec<u64>,
    x: Vec<Vec<f64>>,
    names: Vec<String>,
    b: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let boot =
        econometrics::bootstrap_fit(&design_from(y, x, names)?, b, seed).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("names", &boot.names)?;
    out.set_item("dropped", boot.dropped)?;
    let quantiles: Vec<(f64, f64, f64)> = boot
        .quantiles
        .iter()
        .map(|q| (q.q025, q.q50, q.q975))
        .collect();
    out.set_item("quantiles", quantiles)?;
    Ok(out.into())
}

/// Generate a synthetic corpus; returns the path of the ready-to-run
/// pipeline config.
#[pyfunction]
#[pyo3(signature = (out_dir, emails = 200, families = 20, seed = 0))]
fn synth_corpus(out_dir: PathBuf, emails: usize, families: usize, seed: u64) -> PyResult<String> {
    let spec = triage_core::app::SynthSpec {
        n_emails: emails,
        n_families: families,
        clicked_fraction: 0.25,
        labeled_fraction: 0.3,
        ..triage_core::app::SynthSpec::default()
    };
    let outputs = triage_core::app::synth_corpus(&spec, seed, &out_dir)
        .map_err(|e| PyIOError::new_err(e.to_string()))?;
    Ok(outputs.config_path.display().to_string())
}

/// Run the full pipeline from a config file; returns the run summary.
#[pyfunction]
fn run_pipeline(py: Python<'_>, config_path: PathBuf) -> PyResult<Py<PyDict>> {
    let cfg =
        triage_core::app::PipelineConfig::from_file(Path::new(&config_path)).map_err(value_err)?;
    let outputs = triage_core::app::run_pipeline(&cfg)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let json = serde_json::to_value(&outputs.summary).map_err(value_err)?;
    let out = PyDict::new(py);
    if let serde_json::Value::Object(map) = json {
        for (k, v) in map {
            out.set_item(k, v.to_string())?;
        }
    }
    out.set_item("queue_len", outputs.queue.len())?;
    Ok(out.into())
}

#[pymodule]
fn triage_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(clean_and_tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(spoof_distance, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(proportional_topn, m)?)?;
    m.add_function(wrap_pyfunction!(fit_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_class::<LldaModel>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

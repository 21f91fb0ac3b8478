//! Phishing triage pipeline library.
//!
//! Quantifies the persuasion triggers embedded in phishing email bodies and
//! predicts the expected click count of each attack, producing a prioritized
//! queue for incident-response teams. The pipeline runs end to end on a
//! reported-email corpus:
//!
//! 1. [`corpus`] — ingest raw forwarded emails, recover the innermost
//!    original headers, apply sanitization filters.
//! 2. [`textproc`] — cleaning, tokenization, stemming, term-frequency
//!    vectors, cosine similarity, Levenshtein distance.
//! 3. [`dedup`] — pairwise-similarity duplicate detection with a
//!    bootstrap-tuned threshold; campaign clustering.
//! 4. [`urlintel`] — suspicious-URL extraction, redirect-chain resolution,
//!    click matching, spoof-distance computation.
//! 5. [`llda`] — supervised labeled-LDA over the six persuasion labels,
//!    with PROPORTIONAL rank-cutoff evaluation.
//! 6. [`econometrics`] — Poisson GLM fitting (IRLS), stepwise models,
//!    bootstrap coefficient distributions, click-prediction simulation,
//!    triage scoring.
//! 7. [`app`] — pipeline orchestration, reports, synthetic-corpus
//!    generation, and the delivery-skew robustness check.
//!
//! All stochastic operations take explicit seeds and are bit-reproducible.

pub mod app;
pub mod corpus;
pub mod dedup;
pub mod econometrics;
pub mod llda;
pub mod rng;
pub mod textproc;
pub mod urlintel;

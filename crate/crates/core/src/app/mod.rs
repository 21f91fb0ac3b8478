//! Pipeline orchestration, reports, synthetic corpora, and robustness
//! checks.

mod clickgen;
mod config;
mod pipeline;
mod report;
mod robustness;
mod synth;

pub use clickgen::{
    coefficient_of_variation, expected_click_events, expected_report_events,
    ratios_by_group, report_events_sd, simulate_click_generation, ClickGenerationModel,
    SimOutcome,
};
pub use config::{ConfigError, PipelineConfig};
pub use pipeline::{read_labels_jsonl, run_pipeline, EmailRedirect, PipelineError, PipelineOutputs, PipelineSummary};
pub use report::{
    report_stats, write_report_csvs, CdfPoint, ClassStats, CorrMatrix, LabelCount,
    ReportBundle, TriggerSummary, WeeklyTrend,
};
pub use robustness::{robustness_ratio, GroupRatio, Grouping, RobustnessTable, DEFAULT_MIN_GROUP};
pub use synth::{
    synth_corpus, synth_label_docs, DocCorpusSpec, SynthOutputs, SynthSpec,
};

//! Statistics engine, sensitivity-analysis suite, and campaign harness for
//! fair comparison of fuzzers.
//!
//! The pipeline turns per-trial time-to-bug records into significance-tested,
//! effect-size-gated rankings:
//!
//! * [`model`] — trial records, the experiment matrix, ingestion, validation,
//!   persistence.
//! * [`stats`] — Mann-Whitney-U (exact and normal-approximate), Vargha-Delaney
//!   A12, Fisher exact test, odds ratio, fractional ranks.
//! * [`ranking`] — per-target pairwise tournaments, fractional ranks, the
//!   cross-target average rank, naive baselines, seed-set contrast.
//! * [`sweep`] — run-time, trial-count, target-subsample, p-threshold, and
//!   effect-threshold sensitivity analyses.
//! * [`simulate`] — synthetic fuzzer models and canned ground-truth scenarios.
//! * [`harness`] — runs external fuzzer commands per trial, verifies crashes
//!   differentially, and records outcomes.
//! * [`chart`] — static SVG line charts for the sweep series.
//!
//! The `senf` binary in this crate exposes all of it on the command line.

pub mod chart;
pub mod cli;
pub mod harness;
pub mod model;
pub mod ranking;
pub mod simulate;
pub mod stats;
pub mod streams;
pub mod sweep;

pub use model::{
    ingest_csv, ingest_json, load, save, validate, EffectThreshold, ExperimentMatrix, StudyConfig,
    TestKind, TrialOutcome, TrialRecord, ValidationReport,
};
pub use ranking::{
    compare_dichotomous, compare_interval, consistency_spread, interval_sample,
    naive_average_ranking, rank_overall, rank_target, seed_set_contrast, Comparison, Direction,
    RankingReport,
};
pub use stats::{
    a12, fisher_exact_p, fractional_ranks, mwu_p, odds_ratio, ContingencyTable2x2, MwuMode,
    PMethod, PValue, Sample,
};
pub use sweep::{
    effect_threshold_sweep, p_threshold_sweep, prefix_trials, runtime_sweep,
    target_subsample_sweep, trial_sweep, truncate, SweepSeries,
};

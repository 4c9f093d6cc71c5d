//! Experiment data model: trial records, the results matrix, ingestion from
//! CSV/JSON, validation, and persistence.
//!
//! The matrix is the sole input to every analysis. It is immutable after
//! construction and safe to share read-only across parallel analyses.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::MwuMode;

/// CSV schema shared by ingestion and the campaign results store.
pub const CSV_HEADER: &str = "fuzzer,target,seed_set,trial,found_at_seconds,cap_seconds";

/// Sentinel in the `found_at_seconds` CSV column for not-found trials.
pub const NOT_FOUND_SENTINEL: &str = "NA";

/// Paper-recommended trial count; fewer trials per group draws a validation
/// warning.
pub const RECOMMENDED_TRIALS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialOutcome {
    /// Bug triggered after this many seconds of wall-clock fuzzing.
    FoundAt(f64),
    NotFound,
}

impl TrialOutcome {
    pub fn found_at(&self) -> Option<f64> {
        match self {
            TrialOutcome::FoundAt(s) => Some(*s),
            TrialOutcome::NotFound => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, TrialOutcome::FoundAt(_))
    }
}

/// One fuzzer x target x seed-set x trial outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub fuzzer_id: String,
    pub target_id: String,
    pub seed_set_id: String,
    pub trial_index: u32,
    pub outcome: TrialOutcome,
    /// Maximum run-time of the trial, in seconds.
    pub cap_seconds: f64,
}

impl TrialRecord {
    fn key(&self) -> (&str, &str, &str, u32) {
        (
            &self.fuzzer_id,
            &self.target_id,
            &self.seed_set_id,
            self.trial_index,
        )
    }

    /// Censored time used by interval-scale analyses: not-found trials count
    /// as the full run-time cap.
    pub fn censored_seconds(&self) -> f64 {
        match self.outcome {
            TrialOutcome::FoundAt(s) => s,
            TrialOutcome::NotFound => self.cap_seconds,
        }
    }

    pub fn to_csv_row(&self) -> String {
        let found = match self.outcome {
            TrialOutcome::FoundAt(s) => format!("{s}"),
            TrialOutcome::NotFound => NOT_FOUND_SENTINEL.to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.fuzzer_id,
            self.target_id,
            self.seed_set_id,
            self.trial_index,
            found,
            self.cap_seconds
        )
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate key ({fuzzer}, {target}, {seed_set}, trial {trial})")]
    DuplicateKey {
        fuzzer: String,
        target: String,
        seed_set: String,
        trial: u32,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("CSV header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// The full results store: every analysis consumes one of these.
///
/// Records are kept sorted by (fuzzer, target, seed_set, trial), so equality
/// is set-of-records equality and serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentMatrix {
    records: Vec<TrialRecord>,
}

impl ExperimentMatrix {
    /// Builds a matrix from records without checking invariants; `validate`
    /// reports violations. Ingestion entry points are stricter.
    pub fn from_records(mut records: Vec<TrialRecord>) -> Self {
        records.sort_by(|a, b| a.key().cmp(&b.key()));
        ExperimentMatrix { records }
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fuzzers(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.fuzzer_id.as_str()).collect()
    }

    pub fn targets(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.target_id.as_str()).collect()
    }

    pub fn seed_sets(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.seed_set_id.as_str()).collect()
    }

    /// All records for one (fuzzer, target, seed_set), in trial order.
    pub fn group(&self, fuzzer: &str, target: &str, seed_set: &str) -> Vec<&TrialRecord> {
        let lo = self
            .records
            .partition_point(|r| r.key() < (fuzzer, target, seed_set, 0));
        self.records[lo..]
            .iter()
            .take_while(|r| {
                r.fuzzer_id == fuzzer && r.target_id == target && r.seed_set_id == seed_set
            })
            .collect()
    }

    /// Records of one seed set grouped target -> fuzzer -> trials, the layout
    /// every tournament walks.
    pub fn by_target(&self, seed_set: &str) -> BTreeMap<&str, BTreeMap<&str, Vec<&TrialRecord>>> {
        let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<&TrialRecord>>> = BTreeMap::new();
        for r in &self.records {
            if r.seed_set_id == seed_set {
                grouped
                    .entry(r.target_id.as_str())
                    .or_default()
                    .entry(r.fuzzer_id.as_str())
                    .or_default()
                    .push(r);
            }
        }
        grouped
    }

    /// Largest run-time cap that every record in the matrix honors.
    pub fn min_cap_seconds(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.cap_seconds)
            .min_by(|a, b| a.partial_cmp(b).expect("caps are finite"))
    }

    pub fn max_trials(&self) -> u32 {
        self.records
            .iter()
            .map(|r| r.trial_index + 1)
            .max()
            .unwrap_or(0)
    }
}

fn check_label(field: &str, value: &str, line: u64) -> Result<(), DataError> {
    if value.is_empty() {
        return Err(DataError::MalformedRow {
            line,
            reason: format!("{field} label is empty"),
        });
    }
    if value.contains(',') || value.contains('\n') || value.contains('\r') {
        return Err(DataError::MalformedRow {
            line,
            reason: format!("{field} label must not contain commas or newlines"),
        });
    }
    Ok(())
}

fn check_record_values(
    found: Option<f64>,
    cap: f64,
    line: u64,
) -> Result<(), DataError> {
    if !cap.is_finite() || cap <= 0.0 {
        return Err(DataError::MalformedRow {
            line,
            reason: format!("cap_seconds must be a positive real, got {cap}"),
        });
    }
    if let Some(s) = found {
        if !s.is_finite() || s <= 0.0 {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("found_at_seconds must be a positive real, got {s}"),
            });
        }
        if s > cap {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("found time {s} exceeds cap {cap}"),
            });
        }
    }
    Ok(())
}

/// Reads an experiment matrix from the CSV schema
/// `fuzzer,target,seed_set,trial,found_at_seconds,cap_seconds`, where
/// `found_at_seconds` is a positive decimal or the literal `NA`.
pub fn ingest_csv(path: &Path) -> Result<ExperimentMatrix, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                DataError::io(path, std::io::Error::other(e.to_string()))
            }
            _ => DataError::Schema(e.to_string()),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| DataError::Schema(e.to_string()))?;
    let found_header = headers.iter().collect::<Vec<_>>().join(",");
    if found_header != CSV_HEADER {
        return Err(DataError::Header {
            expected: CSV_HEADER.to_string(),
            found: found_header,
        });
    }

    let mut records = Vec::new();
    let mut seen: HashSet<(String, String, String, u32)> = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            DataError::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 6 {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("expected 6 fields, found {}", row.len()),
            });
        }
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let parse_f64 = |i: usize, name: &str| -> Result<f64, DataError> {
            field(i).parse::<f64>().map_err(|_| DataError::MalformedRow {
                line,
                reason: format!("{name} is not a number: `{}`", field(i)),
            })
        };

        let fuzzer = field(0).to_string();
        let target = field(1).to_string();
        let seed_set = field(2).to_string();
        check_label("fuzzer", &fuzzer, line)?;
        check_label("target", &target, line)?;
        check_label("seed_set", &seed_set, line)?;
        let trial: u32 = field(3).parse().map_err(|_| DataError::MalformedRow {
            line,
            reason: format!("trial is not a non-negative integer: `{}`", field(3)),
        })?;
        let found = if field(4) == NOT_FOUND_SENTINEL {
            None
        } else {
            Some(parse_f64(4, "found_at_seconds")?)
        };
        let cap = parse_f64(5, "cap_seconds")?;
        check_record_values(found, cap, line)?;

        if !seen.insert((fuzzer.clone(), target.clone(), seed_set.clone(), trial)) {
            return Err(DataError::DuplicateKey {
                fuzzer,
                target,
                seed_set,
                trial,
            });
        }
        records.push(TrialRecord {
            fuzzer_id: fuzzer,
            target_id: target,
            seed_set_id: seed_set,
            trial_index: trial,
            outcome: match found {
                Some(s) => TrialOutcome::FoundAt(s),
                None => TrialOutcome::NotFound,
            },
            cap_seconds: cap,
        });
    }
    Ok(ExperimentMatrix::from_records(records))
}

/// Writes the matrix in the ingestion CSV schema.
pub fn write_csv(matrix: &ExperimentMatrix, path: &Path) -> Result<(), DataError> {
    let mut out = String::with_capacity(matrix.len() * 48 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in matrix.records() {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| DataError::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    records: Vec<RecordJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordJson {
    fuzzer: String,
    target: String,
    seed_set: String,
    trial: u32,
    outcome: OutcomeTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    found_at_seconds: Option<f64>,
    cap_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum OutcomeTag {
    Found,
    NotFound,
}

impl From<&TrialRecord> for RecordJson {
    fn from(r: &TrialRecord) -> Self {
        RecordJson {
            fuzzer: r.fuzzer_id.clone(),
            target: r.target_id.clone(),
            seed_set: r.seed_set_id.clone(),
            trial: r.trial_index,
            outcome: match r.outcome {
                TrialOutcome::FoundAt(_) => OutcomeTag::Found,
                TrialOutcome::NotFound => OutcomeTag::NotFound,
            },
            found_at_seconds: r.outcome.found_at(),
            cap_seconds: r.cap_seconds,
        }
    }
}

impl RecordJson {
    fn into_record(self) -> Result<TrialRecord, DataError> {
        for (field, value) in [
            ("fuzzer", &self.fuzzer),
            ("target", &self.target),
            ("seed_set", &self.seed_set),
        ] {
            check_label(field, value, 0).map_err(|_| {
                DataError::Schema(format!("invalid {field} label `{value}`"))
            })?;
        }
        let outcome = match (self.outcome, self.found_at_seconds) {
            (OutcomeTag::Found, Some(s)) => TrialOutcome::FoundAt(s),
            (OutcomeTag::Found, None) => {
                return Err(DataError::Schema(
                    "outcome is `found` but `found_at_seconds` is missing".into(),
                ))
            }
            (OutcomeTag::NotFound, None) => TrialOutcome::NotFound,
            (OutcomeTag::NotFound, Some(_)) => {
                return Err(DataError::Schema(
                    "outcome is `not_found` but `found_at_seconds` is present".into(),
                ))
            }
        };
        check_record_values(self.found_at_seconds, self.cap_seconds, 0).map_err(|e| {
            DataError::Schema(format!(
                "record ({}, {}, {}, trial {}): {e}",
                self.fuzzer, self.target, self.seed_set, self.trial
            ))
        })?;
        Ok(TrialRecord {
            fuzzer_id: self.fuzzer,
            target_id: self.target,
            seed_set_id: self.seed_set,
            trial_index: self.trial,
            outcome,
            cap_seconds: self.cap_seconds,
        })
    }
}

fn parse_json_records(path: &Path) -> Result<Vec<TrialRecord>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let parsed: MatrixJson =
        serde_json::from_str(&text).map_err(|e| DataError::Schema(e.to_string()))?;
    parsed
        .records
        .into_iter()
        .map(RecordJson::into_record)
        .collect()
}

/// Reads an experiment matrix from the JSON schema; rejects duplicate keys.
pub fn ingest_json(path: &Path) -> Result<ExperimentMatrix, DataError> {
    let records = parse_json_records(path)?;
    let mut seen: HashSet<(String, String, String, u32)> = HashSet::new();
    for r in &records {
        if !seen.insert((
            r.fuzzer_id.clone(),
            r.target_id.clone(),
            r.seed_set_id.clone(),
            r.trial_index,
        )) {
            return Err(DataError::DuplicateKey {
                fuzzer: r.fuzzer_id.clone(),
                target: r.target_id.clone(),
                seed_set: r.seed_set_id.clone(),
                trial: r.trial_index,
            });
        }
    }
    Ok(ExperimentMatrix::from_records(records))
}

/// Persists the matrix as JSON; `load(save(m))` is record-for-record
/// identical to `m`.
pub fn save(matrix: &ExperimentMatrix, path: &Path) -> Result<(), DataError> {
    let json = MatrixJson {
        records: matrix.records().iter().map(RecordJson::from).collect(),
    };
    let mut file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, &json)
        .map_err(|e| DataError::Schema(e.to_string()))?;
    file.write_all(b"\n").map_err(|e| DataError::io(path, e))?;
    Ok(())
}

/// Reloads a persisted matrix. Schema violations are rejected; semantic
/// issues such as duplicate keys are left for `validate` to report.
pub fn load(path: &Path) -> Result<ExperimentMatrix, DataError> {
    Ok(ExperimentMatrix::from_records(parse_json_records(path)?))
}

/// One validation finding; errors break matrix invariants, warnings flag
/// conditions that weaken the statistics but keep them valid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Issue {
    DuplicateKey {
        fuzzer: String,
        target: String,
        seed_set: String,
        trial: u32,
    },
    InvalidRecord {
        fuzzer: String,
        target: String,
        seed_set: String,
        trial: u32,
        reason: String,
    },
    MixedCaps {
        fuzzer: String,
        target: String,
        seed_set: String,
    },
    UnequalTrials {
        target: String,
        seed_set: String,
        detail: String,
    },
    LowTrialCount {
        fuzzer: String,
        target: String,
        seed_set: String,
        trials: usize,
    },
    MissingCoverage {
        fuzzer: String,
        target: String,
        seed_set: String,
    },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateKey { fuzzer, target, seed_set, trial } => write!(
                f,
                "duplicate key ({fuzzer}, {target}, {seed_set}, trial {trial})"
            ),
            Issue::InvalidRecord { fuzzer, target, seed_set, trial, reason } => write!(
                f,
                "invalid record ({fuzzer}, {target}, {seed_set}, trial {trial}): {reason}"
            ),
            Issue::MixedCaps { fuzzer, target, seed_set } => write!(
                f,
                "records for ({fuzzer}, {target}, {seed_set}) disagree on cap_seconds"
            ),
            Issue::UnequalTrials { target, seed_set, detail } => write!(
                f,
                "unequal trial counts on ({target}, {seed_set}): {detail}"
            ),
            Issue::LowTrialCount { fuzzer, target, seed_set, trials } => write!(
                f,
                "only {trials} trials for ({fuzzer}, {target}, {seed_set}); {RECOMMENDED_TRIALS} recommended"
            ),
            Issue::MissingCoverage { fuzzer, target, seed_set } => write!(
                f,
                "fuzzer {fuzzer} has no trials on ({target}, {seed_set})"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return writeln!(f, "validation: clean");
        }
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks matrix invariants and statistical hygiene; never mutates the
/// matrix and never fails.
pub fn validate(matrix: &ExperimentMatrix) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen: HashSet<(&str, &str, &str, u32)> = HashSet::new();
    for r in matrix.records() {
        if !seen.insert(r.key()) {
            report.errors.push(Issue::DuplicateKey {
                fuzzer: r.fuzzer_id.clone(),
                target: r.target_id.clone(),
                seed_set: r.seed_set_id.clone(),
                trial: r.trial_index,
            });
        }
        let mut bad = |reason: String| {
            report.errors.push(Issue::InvalidRecord {
                fuzzer: r.fuzzer_id.clone(),
                target: r.target_id.clone(),
                seed_set: r.seed_set_id.clone(),
                trial: r.trial_index,
                reason,
            });
        };
        if !r.cap_seconds.is_finite() || r.cap_seconds <= 0.0 {
            bad(format!("cap_seconds must be positive, got {}", r.cap_seconds));
        }
        if let TrialOutcome::FoundAt(s) = r.outcome {
            if !s.is_finite() || s <= 0.0 {
                bad(format!("found time must be positive, got {s}"));
            } else if s > r.cap_seconds {
                bad(format!("found time {s} exceeds cap {}", r.cap_seconds));
            }
        }
        for (field, value) in [
            ("fuzzer", &r.fuzzer_id),
            ("target", &r.target_id),
            ("seed_set", &r.seed_set_id),
        ] {
            if check_label(field, value, 0).is_err() {
                bad(format!("invalid {field} label `{value}`"));
            }
        }
    }

    for seed_set in matrix.seed_sets().into_iter().collect::<Vec<_>>() {
        let grouped = matrix.by_target(seed_set);
        let fuzzers_in_set: BTreeSet<&str> = grouped
            .values()
            .flat_map(|per_fuzzer| per_fuzzer.keys().copied())
            .collect();
        for (target, per_fuzzer) in &grouped {
            let counts: BTreeMap<&str, usize> = per_fuzzer
                .iter()
                .map(|(f, recs)| (*f, recs.len()))
                .collect();
            let distinct: BTreeSet<usize> = counts.values().copied().collect();
            if distinct.len() > 1 {
                report.warnings.push(Issue::UnequalTrials {
                    target: target.to_string(),
                    seed_set: seed_set.to_string(),
                    detail: counts
                        .iter()
                        .map(|(f, c)| format!("{f}={c}"))
                        .collect::<Vec<_>>()
                        .join(", "),
                });
            }
            for (fuzzer, recs) in per_fuzzer {
                if recs.len() < RECOMMENDED_TRIALS {
                    report.warnings.push(Issue::LowTrialCount {
                        fuzzer: fuzzer.to_string(),
                        target: target.to_string(),
                        seed_set: seed_set.to_string(),
                        trials: recs.len(),
                    });
                }
                let caps: Vec<f64> = recs.iter().map(|r| r.cap_seconds).collect();
                if caps.windows(2).any(|w| w[0] != w[1]) {
                    report.errors.push(Issue::MixedCaps {
                        fuzzer: fuzzer.to_string(),
                        target: target.to_string(),
                        seed_set: seed_set.to_string(),
                    });
                }
            }
            for fuzzer in &fuzzers_in_set {
                if !per_fuzzer.contains_key(fuzzer) {
                    report.warnings.push(Issue::MissingCoverage {
                        fuzzer: fuzzer.to_string(),
                        target: target.to_string(),
                        seed_set: seed_set.to_string(),
                    });
                }
            }
        }
    }
    report
}

/// Gate on the Vargha-Delaney effect magnitude for directed verdicts.
///
/// The named levels carry the conventional A12 interpretation thresholds
/// (small 0.56, medium 0.64, large 0.71); the gate is applied symmetrically
/// as a distance from the no-effect point 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EffectThreshold {
    #[default]
    None,
    Small,
    Medium,
    Large,
}

impl EffectThreshold {
    /// The A12 value conventionally associated with the level; `None` maps
    /// to 0.5 (every effect passes).
    pub fn a12_value(self) -> f64 {
        match self {
            EffectThreshold::None => 0.5,
            EffectThreshold::Small => 0.56,
            EffectThreshold::Medium => 0.64,
            EffectThreshold::Large => 0.71,
        }
    }

    /// Minimum |A12 - 0.5| required for a directed verdict.
    pub fn gate_distance(self) -> f64 {
        match self {
            EffectThreshold::None => 0.0,
            EffectThreshold::Small => 0.06,
            EffectThreshold::Medium => 0.14,
            EffectThreshold::Large => 0.21,
        }
    }

    pub const ALL: [EffectThreshold; 4] = [
        EffectThreshold::None,
        EffectThreshold::Small,
        EffectThreshold::Medium,
        EffectThreshold::Large,
    ];
}

impl std::str::FromStr for EffectThreshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(EffectThreshold::None),
            "small" | "0.56" => Ok(EffectThreshold::Small),
            "medium" | "0.64" => Ok(EffectThreshold::Medium),
            "large" | "0.71" => Ok(EffectThreshold::Large),
            other => Err(format!(
                "unknown effect threshold `{other}` (expected none|small|medium|large)"
            )),
        }
    }
}

impl fmt::Display for EffectThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EffectThreshold::None => "none",
            EffectThreshold::Small => "small",
            EffectThreshold::Medium => "medium",
            EffectThreshold::Large => "large",
        };
        f.write_str(name)
    }
}

/// Which comparison family a study runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Time-to-bug compared with Mann-Whitney-U + A12.
    #[default]
    Interval,
    /// Found/not-found counts compared with Fisher exact + odds ratio.
    Dichotomous,
}

impl std::str::FromStr for TestKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interval" => Ok(TestKind::Interval),
            "dichotomous" => Ok(TestKind::Dichotomous),
            other => Err(format!(
                "unknown test kind `{other}` (expected interval|dichotomous)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("exact_size_limit of 0 never selects the exact test; use mwu_mode = approx instead")]
    ZeroExactLimit,
    #[error("odds ratio gate must be greater than 1, got {0}")]
    BadOddsRatioGate(f64),
}

/// Study-wide analysis configuration. Defaults mirror the recommended
/// evaluation setup: alpha 0.05, no effect gate, interval tests, automatic
/// exact/approximate MWU selection at combined size 20.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub alpha: f64,
    pub effect_threshold: EffectThreshold,
    pub test_kind: TestKind,
    pub mwu_mode: MwuMode,
    pub exact_size_limit: usize,
    pub rng_seed: u64,
    /// Optional magnitude gate on the odds ratio for dichotomous verdicts;
    /// no gate is applied by default.
    pub odds_ratio_gate: Option<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            alpha: 0.05,
            effect_threshold: EffectThreshold::None,
            test_kind: TestKind::Interval,
            mwu_mode: MwuMode::Auto,
            exact_size_limit: 20,
            rng_seed: 42,
            odds_ratio_gate: None,
        }
    }
}

impl StudyConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(ConfigError::AlphaOutOfRange(self.alpha));
        }
        if self.exact_size_limit == 0 && self.mwu_mode == MwuMode::Auto {
            return Err(ConfigError::ZeroExactLimit);
        }
        if let Some(gate) = self.odds_ratio_gate {
            if !gate.is_finite() || gate <= 1.0 {
                return Err(ConfigError::BadOddsRatioGate(gate));
            }
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_kind(mut self, kind: TestKind) -> Self {
        self.test_kind = kind;
        self
    }

    pub fn with_effect_threshold(mut self, threshold: EffectThreshold) -> Self {
        self.effect_threshold = threshold;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "fuzzer,target,seed_set,trial,found_at_seconds,cap_seconds\n";

    #[test]
    fn ingest_csv_found_row() {
        let f = write_temp(&format!("{HEADER}afl,T01,seeded,0,3600,86400\n"));
        let m = ingest_csv(f.path()).unwrap();
        assert_eq!(m.len(), 1);
        let r = &m.records()[0];
        assert_eq!(r.outcome, TrialOutcome::FoundAt(3600.0));
        assert_eq!(r.cap_seconds, 86400.0);
    }

    #[test]
    fn ingest_csv_not_found_sentinel() {
        let f = write_temp(&format!("{HEADER}afl,T01,seeded,1,NA,86400\n"));
        let m = ingest_csv(f.path()).unwrap();
        assert_eq!(m.records()[0].outcome, TrialOutcome::NotFound);
    }

    #[test]
    fn ingest_csv_found_beyond_cap_is_malformed() {
        let f = write_temp(&format!("{HEADER}afl,T01,seeded,0,90000,86400\n"));
        match ingest_csv(f.path()) {
            Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn ingest_csv_duplicate_key() {
        let f = write_temp(&format!(
            "{HEADER}afl,T01,seeded,0,10,86400\nafl,T01,seeded,0,20,86400\n"
        ));
        assert!(matches!(
            ingest_csv(f.path()),
            Err(DataError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn ingest_csv_header_mismatch() {
        let f = write_temp("a,b,c\n1,2,3\n");
        assert!(matches!(ingest_csv(f.path()), Err(DataError::Header { .. })));
    }

    #[test]
    fn ingest_csv_order_insensitive() {
        let rows = ["afl,T01,seeded,0,10,86400", "qsf,T02,seeded,1,NA,86400"];
        let fwd = write_temp(&format!("{HEADER}{}\n{}\n", rows[0], rows[1]));
        let rev = write_temp(&format!("{HEADER}{}\n{}\n", rows[1], rows[0]));
        assert_eq!(ingest_csv(fwd.path()).unwrap(), ingest_csv(rev.path()).unwrap());
    }

    #[test]
    fn ingest_json_empty_records() {
        let f = write_temp(r#"{"records": []}"#);
        assert!(ingest_json(f.path()).unwrap().is_empty());
    }

    #[test]
    fn ingest_json_single_record() {
        let f = write_temp(
            r#"{"records":[{"fuzzer":"afl","target":"T01","seed_set":"seeded",
                "trial":0,"outcome":"found","found_at_seconds":3600,"cap_seconds":86400}]}"#,
        );
        let m = ingest_json(f.path()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.records()[0].outcome, TrialOutcome::FoundAt(3600.0));
    }

    #[test]
    fn ingest_json_missing_cap_names_field() {
        let f = write_temp(
            r#"{"records":[{"fuzzer":"afl","target":"T01","seed_set":"seeded",
                "trial":0,"outcome":"not_found"}]}"#,
        );
        match ingest_json(f.path()) {
            Err(DataError::Schema(msg)) => assert!(msg.contains("cap_seconds"), "{msg}"),
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn ingest_json_found_requires_time() {
        let f = write_temp(
            r#"{"records":[{"fuzzer":"afl","target":"T01","seed_set":"seeded",
                "trial":0,"outcome":"found","cap_seconds":10}]}"#,
        );
        assert!(matches!(ingest_json(f.path()), Err(DataError::Schema(_))));
    }

    fn three_record_matrix() -> ExperimentMatrix {
        ExperimentMatrix::from_records(vec![
            TrialRecord {
                fuzzer_id: "afl".into(),
                target_id: "T01".into(),
                seed_set_id: "seeded".into(),
                trial_index: 0,
                outcome: TrialOutcome::FoundAt(12.5),
                cap_seconds: 86400.0,
            },
            TrialRecord {
                fuzzer_id: "afl".into(),
                target_id: "T01".into(),
                seed_set_id: "seeded".into(),
                trial_index: 1,
                outcome: TrialOutcome::NotFound,
                cap_seconds: 86400.0,
            },
            TrialRecord {
                fuzzer_id: "qsf".into(),
                target_id: "T01".into(),
                seed_set_id: "seeded".into(),
                trial_index: 0,
                outcome: TrialOutcome::FoundAt(0.125),
                cap_seconds: 86400.0,
            },
        ])
    }

    #[test]
    fn save_load_round_trip() {
        let m = three_record_matrix();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("matrix.json");
        save(&m, &path).unwrap();
        assert_eq!(load(&path).unwrap(), m);
    }

    #[test]
    fn load_truncated_file_is_schema_error() {
        let f = write_temp(r#"{"records":[{"fuzzer":"afl","#);
        assert!(matches!(load(f.path()), Err(DataError::Schema(_))));
    }

    #[test]
    fn save_to_unwritable_path_is_io_error() {
        let m = three_record_matrix();
        let err = save(&m, Path::new("/nonexistent-dir/matrix.json")).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }

    #[test]
    fn validate_clean_matrix() {
        let records: Vec<TrialRecord> = (0..30)
            .flat_map(|trial| {
                ["afl", "qsf"].into_iter().map(move |f| TrialRecord {
                    fuzzer_id: f.into(),
                    target_id: "T01".into(),
                    seed_set_id: "seeded".into(),
                    trial_index: trial,
                    outcome: TrialOutcome::NotFound,
                    cap_seconds: 86400.0,
                })
            })
            .collect();
        let report = validate(&ExperimentMatrix::from_records(records));
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn validate_warns_on_unequal_trials() {
        let mut records = Vec::new();
        for trial in 0..30 {
            records.push(TrialRecord {
                fuzzer_id: "afl".into(),
                target_id: "T01".into(),
                seed_set_id: "seeded".into(),
                trial_index: trial,
                outcome: TrialOutcome::NotFound,
                cap_seconds: 86400.0,
            });
        }
        for trial in 0..10 {
            records.push(TrialRecord {
                fuzzer_id: "qsf".into(),
                target_id: "T01".into(),
                seed_set_id: "seeded".into(),
                trial_index: trial,
                outcome: TrialOutcome::NotFound,
                cap_seconds: 86400.0,
            });
        }
        let report = validate(&ExperimentMatrix::from_records(records));
        assert!(report.errors.is_empty());
        assert!(report
            .warnings
            .iter()
            .any(|w| matches!(w, Issue::UnequalTrials { .. })));
    }

    #[test]
    fn validate_flags_duplicate_key_as_error() {
        let r = TrialRecord {
            fuzzer_id: "afl".into(),
            target_id: "T01".into(),
            seed_set_id: "seeded".into(),
            trial_index: 0,
            outcome: TrialOutcome::NotFound,
            cap_seconds: 86400.0,
        };
        let report = validate(&ExperimentMatrix::from_records(vec![r.clone(), r]));
        assert!(report
            .errors
            .iter()
            .any(|e| matches!(e, Issue::DuplicateKey { .. })));
    }

    #[test]
    fn study_config_default_matches_recommended_setup() {
        let cfg = StudyConfig::default();
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.effect_threshold, EffectThreshold::None);
        assert_eq!(cfg.test_kind, TestKind::Interval);
        assert_eq!(cfg.exact_size_limit, 20);
        assert!(cfg.check().is_ok());
    }

    #[test]
    fn study_config_rejects_bad_alpha() {
        assert!(StudyConfig::default().with_alpha(1.5).check().is_err());
        assert!(StudyConfig::default().with_alpha(0.0).check().is_err());
    }
}

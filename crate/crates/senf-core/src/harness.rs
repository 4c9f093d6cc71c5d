//! Single-machine campaign harness: launches an external fuzzer per trial,
//! watches for candidate crash inputs, verifies them by differential
//! execution against a vulnerable/patched binary pair, and records one
//! trial outcome per run.
//!
//! A trial stops at the first verified crash (the candidate file's
//! modification time stamps the find, so verification latency never
//! penalizes the fuzzer) or at the run-time cap. A fuzzer that dies early
//! is restarted up to [`MAX_RESTARTS`] times before the trial is declared a
//! fuzzer error. Worker slots run trials concurrently; the results store is
//! append-only with a single writer.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ExperimentMatrix, TrialOutcome, TrialRecord, CSV_HEADER};

/// A fuzzer process that exits early is relaunched at most this many times
/// per trial before the trial reports a fuzzer error.
pub const MAX_RESTARTS: u32 = 3;

/// Wall-clock bound on each verification run; an overrun counts as
/// non-crashing for that binary.
pub const VERIFY_TIMEOUT_SECONDS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("binary {0} does not exist or is not executable")]
    MissingBinary(PathBuf),
    #[error("failed to spawn `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("working directory {0} already exists; refusing to overwrite a finished trial")]
    WorkdirCollision(PathBuf),
    #[error("invalid campaign spec: {0}")]
    BadSpec(String),
    #[error("invalid crash glob pattern: {0}")]
    BadGlob(#[from] glob::PatternError),
}

impl HarnessError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// How the target binaries consume a test input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// Input piped to the binary's stdin.
    Stdin,
    /// Input path appended as the final command-line argument.
    FileArgument,
}

fn default_poll_seconds() -> f64 {
    5.0
}

/// Everything needed to launch, monitor, and verify the trials of one
/// fuzzer x target x seed-set experiment.
///
/// `launch_command` is an argument vector in which `{workdir}`, `{seeds}`,
/// and `{output}` expand to the trial working directory, the seed directory,
/// and the campaign output directory. `crash_glob` (same placeholders) is
/// polled for candidate crash inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub fuzzer_id: String,
    pub target_id: String,
    pub seed_set_id: String,
    pub launch_command: Vec<String>,
    pub crash_glob: String,
    pub vulnerable_binary: PathBuf,
    pub patched_binary: PathBuf,
    pub input_mode: InputMode,
    pub cap_seconds: f64,
    pub trials: u32,
    pub parallel_slots: u32,
    #[serde(default = "default_poll_seconds")]
    pub liveness_poll_seconds: f64,
    /// Exit codes counted as a crash in addition to death by signal.
    #[serde(default)]
    pub crash_exit_codes: Vec<i32>,
    pub seeds_dir: PathBuf,
    pub output_dir: PathBuf,
}

const PLACEHOLDERS: [&str; 3] = ["{workdir}", "{seeds}", "{output}"];

impl CampaignSpec {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let spec: CampaignSpec =
            serde_json::from_str(&text).map_err(|e| HarnessError::BadSpec(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        if self.launch_command.is_empty() {
            return Err(HarnessError::BadSpec("launch_command is empty".into()));
        }
        if !self.cap_seconds.is_finite() || self.cap_seconds <= 0.0 {
            return Err(HarnessError::BadSpec(format!(
                "cap_seconds must be positive, got {}",
                self.cap_seconds
            )));
        }
        if self.trials == 0 {
            return Err(HarnessError::BadSpec("trials must be at least 1".into()));
        }
        if self.parallel_slots == 0 {
            return Err(HarnessError::BadSpec(
                "parallel_slots must be at least 1".into(),
            ));
        }
        if !self.liveness_poll_seconds.is_finite() || self.liveness_poll_seconds <= 0.0 {
            return Err(HarnessError::BadSpec(format!(
                "liveness_poll_seconds must be positive, got {}",
                self.liveness_poll_seconds
            )));
        }
        for arg in std::iter::once(&self.crash_glob).chain(self.launch_command.iter()) {
            let mut rest = arg.as_str();
            while let Some(open) = rest.find('{') {
                let tail = &rest[open..];
                match tail.find('}') {
                    Some(close) => {
                        let token = &tail[..=close];
                        if !PLACEHOLDERS.contains(&token) {
                            return Err(HarnessError::BadSpec(format!(
                                "unknown placeholder `{token}` in `{arg}`"
                            )));
                        }
                        rest = &tail[close + 1..];
                    }
                    None => {
                        return Err(HarnessError::BadSpec(format!(
                            "unbalanced placeholder brace in `{arg}`"
                        )))
                    }
                }
            }
        }
        for binary in [&self.vulnerable_binary, &self.patched_binary] {
            if !is_executable(binary) {
                return Err(HarnessError::MissingBinary(binary.clone()));
            }
        }
        Ok(())
    }

    fn resolve(&self, template: &str, workdir: &Path) -> String {
        template
            .replace("{workdir}", &workdir.display().to_string())
            .replace("{seeds}", &self.seeds_dir.display().to_string())
            .replace("{output}", &self.output_dir.display().to_string())
    }

    fn workdir(&self, trial_index: u32) -> PathBuf {
        self.output_dir.join("work").join(format!("trial_{trial_index}"))
    }

    fn record(&self, trial_index: u32, outcome: TrialOutcome) -> TrialRecord {
        TrialRecord {
            fuzzer_id: self.fuzzer_id.clone(),
            target_id: self.target_id.clone(),
            seed_set_id: self.seed_set_id.clone(),
            trial_index,
            outcome,
            cap_seconds: self.cap_seconds,
        }
    }
}

fn is_executable(path: &Path) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::metadata(path)
            .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
            .unwrap_or(false)
    }
    #[cfg(not(unix))]
    {
        path.is_file()
    }
}

/// How a trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Found,
    Timeout,
    FuzzerError,
}

/// Outcome of one monitored trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub record: TrialRecord,
    /// Archived copy of the verified crashing input; present iff found.
    pub verified_input: Option<PathBuf>,
    pub restarts: u32,
    pub termination: Termination,
}

struct TrialLog {
    file: fs::File,
    started: Instant,
}

impl TrialLog {
    fn create(path: &Path) -> Result<Self, HarnessError> {
        let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(TrialLog {
            file,
            started: Instant::now(),
        })
    }

    fn event(&mut self, message: &str) {
        let elapsed = self.started.elapsed().as_secs_f64();
        let _ = writeln!(self.file, "[{elapsed:10.3}s] {message}");
        let _ = self.file.flush();
    }
}

/// Child process that is killed and reaped when dropped.
struct KillOnDrop(Option<Child>);

impl KillOnDrop {
    fn child(&mut self) -> &mut Child {
        self.0.as_mut().expect("child present until dropped")
    }

    fn stop(&mut self) {
        if let Some(mut child) = self.0.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Drop for KillOnDrop {
    fn drop(&mut self) {
        self.stop();
    }
}

fn status_is_crash(status: std::process::ExitStatus, crash_exit_codes: &[i32]) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if status.signal().is_some() {
            return true;
        }
    }
    match status.code() {
        Some(code) => crash_exit_codes.contains(&code),
        None => false,
    }
}

/// Runs `binary` on `input` per the input mode, bounded by
/// [`VERIFY_TIMEOUT_SECONDS`]; reports whether the run crashed. Overruns are
/// killed and count as non-crashing.
fn runs_and_crashes(
    binary: &Path,
    input: &Path,
    mode: InputMode,
    crash_exit_codes: &[i32],
) -> Result<bool, HarnessError> {
    let mut command = Command::new(binary);
    command.stdout(Stdio::null()).stderr(Stdio::null());
    match mode {
        InputMode::Stdin => {
            let file = fs::File::open(input).map_err(|e| HarnessError::io(input, e))?;
            command.stdin(Stdio::from(file));
        }
        InputMode::FileArgument => {
            command.stdin(Stdio::null());
            command.arg(input);
        }
    }
    let child = command.spawn().map_err(|e| HarnessError::Spawn {
        command: binary.display().to_string(),
        source: e,
    })?;
    let mut guard = KillOnDrop(Some(child));
    let deadline = Instant::now() + Duration::from_secs_f64(VERIFY_TIMEOUT_SECONDS);
    loop {
        if let Some(status) = guard
            .child()
            .try_wait()
            .map_err(|e| HarnessError::io(binary, e))?
        {
            guard.0.take();
            return Ok(status_is_crash(status, crash_exit_codes));
        }
        if Instant::now() >= deadline {
            guard.stop();
            return Ok(false);
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

/// Differential crash verification: true iff the input crashes the
/// vulnerable binary and the patched binary survives it.
pub fn verify_crash(input: &Path, spec: &CampaignSpec) -> Result<bool, HarnessError> {
    for binary in [&spec.vulnerable_binary, &spec.patched_binary] {
        if !is_executable(binary) {
            return Err(HarnessError::MissingBinary(binary.clone()));
        }
    }
    if !runs_and_crashes(
        &spec.vulnerable_binary,
        input,
        spec.input_mode,
        &spec.crash_exit_codes,
    )? {
        return Ok(false);
    }
    Ok(!runs_and_crashes(
        &spec.patched_binary,
        input,
        spec.input_mode,
        &spec.crash_exit_codes,
    )?)
}

fn spawn_fuzzer(argv: &[String], workdir: &Path, log_path: &Path) -> Result<Child, HarnessError> {
    let stdout = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(log_path)
        .map_err(|e| HarnessError::io(log_path, e))?;
    let stderr = stdout.try_clone().map_err(|e| HarnessError::io(log_path, e))?;
    Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::from(stdout))
        .stderr(Stdio::from(stderr))
        .spawn()
        .map_err(|e| HarnessError::Spawn {
            command: argv.join(" "),
            source: e,
        })
}

fn modified_time(path: &Path) -> Option<SystemTime> {
    fs::metadata(path).ok().and_then(|m| m.modified().ok())
}

/// Runs one monitored trial: launch the fuzzer in a fresh working
/// directory, poll the crash glob, differentially verify each new candidate,
/// and stop at the first verified crash, the run-time cap, or a fuzzer that
/// keeps dying. The recorded find time is the candidate file's modification
/// time relative to launch, clamped to (0, cap].
pub fn run_trial(spec: &CampaignSpec, trial_index: u32) -> Result<TrialResult, HarnessError> {
    let workdir = spec.workdir(trial_index);
    if workdir.exists() {
        return Err(HarnessError::WorkdirCollision(workdir));
    }
    fs::create_dir_all(&workdir).map_err(|e| HarnessError::io(&workdir, e))?;
    let logs_dir = spec.output_dir.join("logs");
    fs::create_dir_all(&logs_dir).map_err(|e| HarnessError::io(&logs_dir, e))?;
    let mut log = TrialLog::create(&logs_dir.join(format!("trial_{trial_index}.log")))?;

    let argv: Vec<String> = spec
        .launch_command
        .iter()
        .map(|arg| spec.resolve(arg, &workdir))
        .collect();
    let pattern = spec.resolve(&spec.crash_glob, &workdir);
    let fuzzer_log = workdir.join("fuzzer.log");

    let launch_wall = SystemTime::now();
    let started = Instant::now();
    let cap = Duration::from_secs_f64(spec.cap_seconds);
    let poll = Duration::from_secs_f64(spec.liveness_poll_seconds);

    log.event(&format!("launch: {}", argv.join(" ")));
    let mut fuzzer = KillOnDrop(Some(spawn_fuzzer(&argv, &workdir, &fuzzer_log)?));
    let mut restarts = 0u32;
    let mut seen: BTreeSet<PathBuf> = BTreeSet::new();

    loop {
        // Candidates first: a fuzzer that wrote a crash and exited must be
        // judged on the crash, not restarted.
        let mut candidates: Vec<PathBuf> = glob::glob(&pattern)?
            .filter_map(Result::ok)
            .filter(|p| p.is_file() && !seen.contains(p))
            .collect();
        candidates.sort();
        for candidate in candidates {
            seen.insert(candidate.clone());
            log.event(&format!("candidate: {}", candidate.display()));
            let found_wall = modified_time(&candidate);
            if verify_crash(&candidate, spec)? {
                fuzzer.stop();
                let elapsed = found_wall
                    .and_then(|t| t.duration_since(launch_wall).ok())
                    .unwrap_or_else(|| started.elapsed());
                let found_at = elapsed
                    .as_secs_f64()
                    .clamp(f64::MIN_POSITIVE, spec.cap_seconds);
                let archive_dir = spec
                    .output_dir
                    .join("verified")
                    .join(format!("trial_{trial_index}"));
                fs::create_dir_all(&archive_dir).map_err(|e| HarnessError::io(&archive_dir, e))?;
                let file_name = candidate
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "input".to_string());
                let archived = archive_dir.join(file_name);
                fs::copy(&candidate, &archived).map_err(|e| HarnessError::io(&archived, e))?;
                log.event(&format!(
                    "verified: {} at {found_at:.3}s",
                    archived.display()
                ));
                log.event("stop: found");
                return Ok(TrialResult {
                    record: spec.record(trial_index, TrialOutcome::FoundAt(found_at)),
                    verified_input: Some(archived),
                    restarts,
                    termination: Termination::Found,
                });
            }
            log.event("candidate rejected: does not reproduce differentially");
        }

        if started.elapsed() >= cap {
            fuzzer.stop();
            log.event("stop: timeout");
            return Ok(TrialResult {
                record: spec.record(trial_index, TrialOutcome::NotFound),
                verified_input: None,
                restarts,
                termination: Termination::Timeout,
            });
        }

        let exited = fuzzer
            .child()
            .try_wait()
            .map_err(|e| HarnessError::io(&workdir, e))?;
        if let Some(status) = exited {
            if restarts < MAX_RESTARTS {
                restarts += 1;
                log.event(&format!(
                    "restart {restarts}/{MAX_RESTARTS}: fuzzer exited with {status}"
                ));
                fuzzer.stop();
                fuzzer = KillOnDrop(Some(spawn_fuzzer(&argv, &workdir, &fuzzer_log)?));
            } else {
                fuzzer.stop();
                log.event("stop: fuzzer_error");
                return Ok(TrialResult {
                    record: spec.record(trial_index, TrialOutcome::NotFound),
                    verified_input: None,
                    restarts,
                    termination: Termination::FuzzerError,
                });
            }
        }

        let remaining = cap.saturating_sub(started.elapsed());
        std::thread::sleep(poll.min(remaining).max(Duration::from_millis(1)));
    }
}

/// A trial that produced no usable record, with the reason.
#[derive(Debug)]
pub struct CampaignFailure {
    pub trial_index: u32,
    pub message: String,
}

/// Aggregate outcome of `run_campaign`.
#[derive(Debug)]
pub struct CampaignReport {
    /// Every trial that ran to a conclusion, in trial order. Trials that
    /// ended in `FuzzerError` appear here but contribute no record.
    pub results: Vec<TrialResult>,
    /// Trials that produced no record (spawn failures, workdir collisions,
    /// fuzzer errors), with the reason.
    pub failures: Vec<CampaignFailure>,
    /// Records of the concluded found/timeout trials.
    pub matrix: ExperimentMatrix,
    /// CSV results store the records were appended to.
    pub store_path: PathBuf,
}

/// Executes all trials of the spec on a local worker pool of
/// `parallel_slots` threads. Each concluded found/timeout trial is appended
/// to `{output}/results.csv` as it finishes (single writer, one flushed line
/// per trial); partial results survive individual trial failures.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignReport, HarnessError> {
    spec.check()?;
    fs::create_dir_all(&spec.output_dir).map_err(|e| HarnessError::io(&spec.output_dir, e))?;
    let store_path = spec.output_dir.join("results.csv");
    let store_exists = store_path.exists();
    let mut store = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&store_path)
        .map_err(|e| HarnessError::io(&store_path, e))?;
    if !store_exists {
        store
            .write_all(format!("{CSV_HEADER}\n").as_bytes())
            .map_err(|e| HarnessError::io(&store_path, e))?;
    }

    let slots = spec.parallel_slots.min(spec.trials).max(1);
    let (result_tx, result_rx) = mpsc::channel::<(u32, Result<TrialResult, HarnessError>)>();
    let next_trial = Mutex::new(0u32);

    std::thread::scope(|scope| {
        for _ in 0..slots {
            let result_tx = result_tx.clone();
            let next_trial = &next_trial;
            scope.spawn(move || loop {
                let trial_index = {
                    let mut next = next_trial.lock().expect("trial counter lock");
                    if *next >= spec.trials {
                        return;
                    }
                    let i = *next;
                    *next += 1;
                    i
                };
                let outcome = run_trial(spec, trial_index);
                if result_tx.send((trial_index, outcome)).is_err() {
                    return;
                }
            });
        }
        drop(result_tx);

        let mut results = Vec::new();
        let mut failures = Vec::new();
        let mut records = Vec::new();
        while let Ok((trial_index, outcome)) = result_rx.recv() {
            match outcome {
                Ok(result) => {
                    if result.termination == Termination::FuzzerError {
                        failures.push(CampaignFailure {
                            trial_index,
                            message: format!(
                                "fuzzer kept exiting; gave up after {} restarts",
                                result.restarts
                            ),
                        });
                    } else {
                        // One write per trial so a crash of the harness
                        // itself never leaves a torn store.
                        let line = format!("{}\n", result.record.to_csv_row());
                        store
                            .write_all(line.as_bytes())
                            .map_err(|e| HarnessError::io(&store_path, e))?;
                        store.flush().map_err(|e| HarnessError::io(&store_path, e))?;
                        records.push(result.record.clone());
                    }
                    results.push(result);
                }
                Err(err) => failures.push(CampaignFailure {
                    trial_index,
                    message: err.to_string(),
                }),
            }
        }
        results.sort_by_key(|r| r.record.trial_index);
        failures.sort_by_key(|f| f.trial_index);
        Ok(CampaignReport {
            results,
            failures,
            matrix: ExperimentMatrix::from_records(records),
            store_path: store_path.clone(),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_spec() -> CampaignSpec {
        CampaignSpec {
            fuzzer_id: "stub".into(),
            target_id: "T01".into(),
            seed_set_id: "seeded".into(),
            launch_command: vec!["/bin/true".into()],
            crash_glob: "{workdir}/crashes/*".into(),
            vulnerable_binary: "/bin/true".into(),
            patched_binary: "/bin/true".into(),
            input_mode: InputMode::Stdin,
            cap_seconds: 5.0,
            trials: 1,
            parallel_slots: 1,
            liveness_poll_seconds: 0.2,
            crash_exit_codes: vec![],
            seeds_dir: "/tmp".into(),
            output_dir: "/tmp/senf-test-out".into(),
        }
    }

    #[test]
    fn spec_placeholder_validation() {
        let mut spec = test_spec();
        spec.launch_command = vec!["fuzz".into(), "{workdirx}".into()];
        assert!(matches!(spec.check(), Err(HarnessError::BadSpec(_))));
        spec.launch_command = vec!["fuzz".into(), "{workdir}/out".into()];
        assert!(spec.check().is_ok());
    }

    #[test]
    fn spec_rejects_zero_trials_and_slots() {
        let mut spec = test_spec();
        spec.trials = 0;
        assert!(spec.check().is_err());
        spec.trials = 1;
        spec.parallel_slots = 0;
        assert!(spec.check().is_err());
    }

    #[test]
    fn spec_rejects_missing_binary() {
        let mut spec = test_spec();
        spec.vulnerable_binary = "/nonexistent/vuln".into();
        assert!(matches!(spec.check(), Err(HarnessError::MissingBinary(_))));
    }
}

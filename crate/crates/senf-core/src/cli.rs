//! Command-line binding of the whole pipeline: ingest, validate, rank,
//! sweeps, seed contrast, baselines, simulation, and the campaign harness.
//!
//! Every subcommand is a thin wrapper over the library operation of the same
//! name; outputs are written to `--out` (or `$SENF_OUT`, or the current
//! directory) and are byte-identical across runs given the same inputs and
//! RNG seed. Exit status 0 means success, 1 a data error, 2 a usage error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::chart::{render_chart, ChartSpec, Series};
use crate::harness::{run_campaign, CampaignSpec, Termination};
use crate::model::{self, EffectThreshold, ExperimentMatrix, StudyConfig, TestKind};
use crate::ranking::{
    consistency_spread, naive_average_ranking, rank_overall, seed_set_contrast, RankingReport,
};
use crate::simulate::{scenario, scenario_targets, simulate, ModelSet};
use crate::stats::MwuMode;
use crate::sweep::{
    effect_threshold_sweep, p_threshold_sweep, runtime_sweep, short_groups,
    target_subsample_sweep, trial_sweep, SweepSeries,
};

const DEFAULT_ALPHA_GRID: &str = "5e-8,5e-7,5e-6,5e-5,5e-4,5e-3,5e-2";

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown values, conflicting flags, out-of-range
    /// parameters. Exit status 2.
    Usage(String),
    /// The invocation was fine but the data was not. Exit status 1.
    Data(String),
}

impl CliError {
    fn data(err: impl std::fmt::Display) -> Self {
        CliError::Data(err.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || v <= 0.0 || v >= 1.0 {
        return Err(format!("alpha must lie strictly between 0 and 1, got {s}"));
    }
    Ok(v)
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(format!("expected a positive number, got {s}"));
    }
    Ok(v)
}

/// Parses `a:b:step` range syntax or a comma-separated list into an
/// ascending deduplicated grid.
fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let mut values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range syntax is a:b:step, got `{s}`"));
        }
        let a: f64 = parts[0]
            .parse()
            .map_err(|_| format!("bad range start `{}`", parts[0]))?;
        let b: f64 = parts[1]
            .parse()
            .map_err(|_| format!("bad range end `{}`", parts[1]))?;
        let step: f64 = parts[2]
            .parse()
            .map_err(|_| format!("bad range step `{}`", parts[2]))?;
        if !step.is_finite() || step <= 0.0 || b < a {
            return Err(format!("range requires a <= b and step > 0, got `{s}`"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad value `{v}`")))
            .collect::<Result<_, _>>()?
    };
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(values)
}

fn parse_int_grid(s: &str) -> Result<Vec<u32>, String> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                Err(format!("expected non-negative integers, got {v}"))
            } else {
                Ok(v as u32)
            }
        })
        .collect()
}

/// Statistical configuration shared by every analysis subcommand. Defaults
/// reproduce the recommended evaluation setup: p threshold 0.05,
/// interval-scale tests, no effect gate.
#[derive(Debug, Args, Clone)]
struct StudyArgs {
    /// Significance threshold for directed verdicts
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    alpha: f64,
    /// Test family: interval (time-to-bug) or dichotomous (found counts)
    #[arg(long, default_value = "interval")]
    kind: TestKind,
    /// Minimum A12 effect for a directed verdict: none|small|medium|large
    #[arg(long, default_value = "none")]
    effect_threshold: EffectThreshold,
    /// Mann-Whitney computation: exact|approx|auto
    #[arg(long, default_value = "auto")]
    mwu_mode: MwuMode,
    /// Combined sample size up to which `auto` picks the exact test
    #[arg(long, default_value_t = 20)]
    exact_size_limit: usize,
    /// Master seed for all randomized analyses
    #[arg(long, default_value_t = 42)]
    rng_seed: u64,
    /// Optional odds-ratio magnitude gate for dichotomous verdicts
    #[arg(long)]
    or_gate: Option<f64>,
}

impl StudyArgs {
    fn to_config(&self) -> Result<StudyConfig, CliError> {
        let cfg = StudyConfig {
            alpha: self.alpha,
            effect_threshold: self.effect_threshold,
            test_kind: self.kind,
            mwu_mode: self.mwu_mode,
            exact_size_limit: self.exact_size_limit,
            rng_seed: self.rng_seed,
            odds_ratio_gate: self.or_gate,
        };
        cfg.check().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct DbArg {
    /// Experiment matrix (JSON database produced by `ingest` or `simulate`)
    #[arg(long)]
    db: PathBuf,
}

#[derive(Debug, Parser)]
#[command(
    name = "senf",
    version,
    about = "Statistical evaluation and fair ranking of fuzzers"
)]
pub struct Cli {
    /// Output directory for generated files
    #[arg(long, global = true, env = "SENF_OUT")]
    out: Option<PathBuf>,
    /// Report errors as machine-readable JSON on stderr
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a CSV or JSON results file into a validated matrix database
    Ingest {
        /// Input results file (.csv or .json)
        #[arg(long)]
        input: PathBuf,
        /// Where to write the matrix database (default <out>/matrix.json)
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Check matrix invariants and statistical hygiene
    Validate {
        #[command(flatten)]
        db: DbArg,
    },
    /// Compute the significance-gated tournament ranking
    Rank {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        /// Seed set to rank (defaults to the only one present)
        #[arg(long)]
        seed_set: Option<String>,
    },
    /// Ranking as a function of the maximum run-time
    SweepTime {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_set: Option<String>,
        /// Truncation horizons in seconds (a:b:step or comma list);
        /// default: hourly from 1h up to the run-time cap (at most 24h)
        #[arg(long)]
        times: Option<String>,
    },
    /// Ranking as a function of the number of trials
    SweepTrials {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_set: Option<String>,
        /// Trial prefixes to evaluate (a:b:step or comma list)
        #[arg(long, default_value = "5:30:5")]
        ks: String,
    },
    /// Ranking envelope over random target subsets
    SweepTargets {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_set: Option<String>,
        /// Subset sizes to evaluate (a:b:step or comma list)
        #[arg(long, default_value = "5:35:5")]
        sizes: String,
        /// Random subsets drawn per size
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Ranking as a function of the p threshold, both test families
    SweepP {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_set: Option<String>,
        /// Significance thresholds (comma list)
        #[arg(long, default_value = DEFAULT_ALPHA_GRID)]
        alphas: String,
    },
    /// Interval ranking under each effect-size gate
    SweepEffect {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_set: Option<String>,
    },
    /// Count per fuzzer how often one seed set beats another
    ContrastSeeds {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_a: String,
        #[arg(long)]
        seed_b: String,
    },
    /// Naive baseline: average number of bugs found per trial
    NaiveRank {
        #[command(flatten)]
        db: DbArg,
        #[arg(long)]
        seed_set: Option<String>,
    },
    /// Min-max spread of time-to-bug per fuzzer and target
    Spread {
        #[command(flatten)]
        db: DbArg,
        #[arg(long)]
        seed_set: Option<String>,
    },
    /// Generate a synthetic matrix from a scenario or model file
    Simulate {
        /// Canned scenario: dominant|indistinguishable|late-bloomer|flaky
        #[arg(long, conflicts_with = "models")]
        scenario: Option<String>,
        /// JSON file with fuzzer models ({"models": [...]})
        #[arg(long)]
        models: Option<PathBuf>,
        /// Number of synthetic targets
        #[arg(long)]
        targets: Option<usize>,
        #[arg(long, default_value_t = 30)]
        trials: u32,
        /// Run-time cap in seconds
        #[arg(long, default_value_t = 86400.0, value_parser = parse_positive_f64)]
        cap: f64,
        #[arg(long, default_value_t = 42)]
        rng_seed: u64,
        #[arg(long, default_value = "seeded")]
        seed_set_id: String,
        /// Where to write the matrix database (default <out>/matrix.json)
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Run external fuzzing trials per a campaign spec file
    RunCampaign {
        /// Campaign spec (JSON)
        #[arg(long)]
        spec: PathBuf,
    },
    /// Full report: ranking, every sweep, baselines, and SVG charts
    Report {
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        seed_set: Option<String>,
        /// Random subsets drawn per target-sweep size
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

/// Entry point used by the `senf` binary.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, message, code) = match &err {
                CliError::Usage(m) => ("usage", m, 2),
                CliError::Data(m) => ("data", m, 1),
            };
            if json_errors {
                eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
            } else {
                eprintln!("error: {message}");
            }
            ExitCode::from(code)
        }
    }
}

fn out_dir(cli_out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = cli_out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| {
        CliError::Data(format!("cannot create output directory {}: {e}", dir.display()))
    })?;
    Ok(dir)
}

fn load_db(path: &Path) -> Result<ExperimentMatrix, CliError> {
    model::load(path).map_err(CliError::data)
}

fn resolve_seed_set(
    matrix: &ExperimentMatrix,
    requested: &Option<String>,
) -> Result<String, CliError> {
    let available: BTreeSet<&str> = matrix.seed_sets();
    match requested {
        Some(s) if available.contains(s.as_str()) => Ok(s.clone()),
        Some(s) => Err(CliError::Data(format!(
            "seed set `{s}` not in the database (available: {})",
            available.into_iter().collect::<Vec<_>>().join(", ")
        ))),
        None if available.len() == 1 => Ok(available.into_iter().next().unwrap().to_string()),
        None => Err(CliError::Usage(format!(
            "--seed-set is required; database contains: {}",
            available.into_iter().collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn write_text(path: &Path, content: &str) -> CliResult {
    fs::write(path, content)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn sweep_chart(series: &SweepSeries, title: &str, x_label: &str) -> ChartSpec {
    ChartSpec {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: "average rank (lower is better)".to_string(),
        series: series
            .series_by_fuzzer()
            .into_iter()
            .map(|(label, points)| Series { label, points })
            .collect(),
        y_inverted: true,
    }
}

fn write_sweep(
    out: &Path,
    stem: &str,
    series: &SweepSeries,
    title: &str,
    x_label: &str,
) -> CliResult {
    write_text(&out.join(format!("{stem}.csv")), &series.to_csv())?;
    let chart = sweep_chart(series, title, x_label);
    let svg_path = out.join(format!("{stem}.svg"));
    render_chart(&chart, &svg_path).map_err(CliError::data)?;
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn write_ranking(out: &Path, report: &RankingReport) -> CliResult {
    write_json(&out.join("ranking.json"), report)?;
    write_text(&out.join("ranking.csv"), &report.average_csv())?;
    write_text(&out.join("ranking_per_target.csv"), &report.per_target_csv())?;
    Ok(())
}

fn default_time_grid(matrix: &ExperimentMatrix) -> Vec<f64> {
    let cap = matrix.min_cap_seconds().unwrap_or(86400.0);
    let hourly: Vec<f64> = (1..=24)
        .map(|h| h as f64 * 3600.0)
        .filter(|&t| t <= cap)
        .collect();
    if hourly.is_empty() {
        vec![cap]
    } else {
        hourly
    }
}

fn run(cli: Cli) -> CliResult {
    let out = out_dir(&cli.out)?;
    match cli.command {
        Command::Ingest { input, db } => {
            let matrix = match input.extension().and_then(|e| e.to_str()) {
                Some("csv") => model::ingest_csv(&input).map_err(CliError::data)?,
                Some("json") => model::ingest_json(&input).map_err(CliError::data)?,
                _ => {
                    return Err(CliError::Usage(format!(
                        "cannot tell the format of {} (expected .csv or .json)",
                        input.display()
                    )))
                }
            };
            let report = model::validate(&matrix);
            print!("{report}");
            let db = db.unwrap_or_else(|| out.join("matrix.json"));
            model::save(&matrix, &db).map_err(CliError::data)?;
            println!(
                "wrote {} ({} records, {} fuzzers, {} targets)",
                db.display(),
                matrix.len(),
                matrix.fuzzers().len(),
                matrix.targets().len()
            );
            Ok(())
        }
        Command::Validate { db } => {
            let matrix = load_db(&db.db)?;
            let report = model::validate(&matrix);
            print!("{report}");
            if report.errors.is_empty() {
                Ok(())
            } else {
                Err(CliError::Data(format!(
                    "{} invariant violation(s) found",
                    report.errors.len()
                )))
            }
        }
        Command::Rank { db, study, seed_set } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let report = rank_overall(&matrix, &seed_set, &cfg).map_err(CliError::data)?;
            let mut rows: Vec<(&String, f64)> =
                report.average_rank.iter().map(|(f, &r)| (f, r)).collect();
            rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));
            println!("average ranking (seed set `{seed_set}`, alpha {}):", cfg.alpha);
            for (fuzzer, rank) in rows {
                println!("  {rank:6.3}  {fuzzer}");
            }
            write_ranking(&out, &report)
        }
        Command::SweepTime { db, study, seed_set, times } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let grid = match times {
                Some(spec) => parse_grid(&spec).map_err(CliError::Usage)?,
                None => default_time_grid(&matrix),
            };
            let series = runtime_sweep(&matrix, &seed_set, &grid, &cfg).map_err(CliError::data)?;
            write_sweep(&out, "sweep_time", &series, "Ranking vs maximum run-time", "run-time (s)")
        }
        Command::SweepTrials { db, study, seed_set, ks } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let grid = parse_int_grid(&ks).map_err(CliError::Usage)?;
            for (fuzzer, target, seed, n) in short_groups(&matrix, *grid.last().unwrap()) {
                eprintln!("note: ({fuzzer}, {target}, {seed}) has only {n} trials");
            }
            let series = trial_sweep(&matrix, &seed_set, &grid, &cfg).map_err(CliError::data)?;
            write_sweep(&out, "sweep_trials", &series, "Ranking vs number of trials", "trials")
        }
        Command::SweepTargets { db, study, seed_set, sizes, samples } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let grid: Vec<usize> = parse_int_grid(&sizes)
                .map_err(CliError::Usage)?
                .into_iter()
                .map(|v| v as usize)
                .collect();
            let series = target_subsample_sweep(&matrix, &seed_set, &grid, samples, &cfg)
                .map_err(CliError::data)?;
            write_sweep(&out, "sweep_targets", &series, "Ranking vs test-set size", "targets")
        }
        Command::SweepP { db, study, seed_set, alphas } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let grid = parse_grid(&alphas).map_err(CliError::Usage)?;
            let (interval, dichotomous) =
                p_threshold_sweep(&matrix, &seed_set, &grid, &cfg).map_err(CliError::data)?;
            write_sweep(&out, "sweep_p_interval", &interval, "Interval ranking vs p threshold", "alpha")?;
            write_sweep(
                &out,
                "sweep_p_dichotomous",
                &dichotomous,
                "Dichotomous ranking vs p threshold",
                "alpha",
            )
        }
        Command::SweepEffect { db, study, seed_set } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let series = effect_threshold_sweep(&matrix, &seed_set, &EffectThreshold::ALL, &cfg)
                .map_err(CliError::data)?;
            write_sweep(
                &out,
                "sweep_effect",
                &series,
                "Ranking vs effect-size threshold",
                "A12 threshold",
            )
        }
        Command::ContrastSeeds { db, study, seed_a, seed_b } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let contrast =
                seed_set_contrast(&matrix, &seed_a, &seed_b, &cfg).map_err(CliError::data)?;
            for warning in &contrast.warnings {
                eprintln!("warning: {warning}");
            }
            println!("wins of `{seed_a}` vs `{seed_b}` (interval | dichotomous):");
            for (fuzzer, c) in &contrast.per_fuzzer {
                println!(
                    "  {fuzzer}: {} vs {} | {} vs {}",
                    c.interval_a, c.interval_b, c.dichotomous_a, c.dichotomous_b
                );
            }
            write_text(&out.join("seed_contrast.csv"), &contrast.to_csv())?;
            write_json(&out.join("seed_contrast.json"), &contrast)
        }
        Command::NaiveRank { db, seed_set } => {
            let matrix = load_db(&db.db)?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let naive = naive_average_ranking(&matrix, &seed_set).map_err(CliError::data)?;
            let mut rows: Vec<(&String, f64)> = naive.iter().map(|(f, &v)| (f, v)).collect();
            rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
            let mut csv = String::from("fuzzer,avg_bugs_found\n");
            println!("average bugs found over all targets:");
            for (fuzzer, avg) in rows {
                println!("  {avg:7.3}  {fuzzer}");
                csv.push_str(&format!("{fuzzer},{avg}\n"));
            }
            write_text(&out.join("naive_rank.csv"), &csv)
        }
        Command::Spread { db, seed_set } => {
            let matrix = load_db(&db.db)?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;
            let spread = consistency_spread(&matrix, &seed_set);
            let mut csv = String::from("fuzzer,target,spread_seconds\n");
            for ((fuzzer, target), value) in &spread {
                // Groups that never found the bug are omitted.
                if let Some(seconds) = value {
                    csv.push_str(&format!("{fuzzer},{target},{seconds}\n"));
                }
            }
            write_text(&out.join("spread.csv"), &csv)
        }
        Command::Simulate {
            scenario: scenario_name,
            models,
            targets,
            trials,
            cap,
            rng_seed,
            seed_set_id,
            db,
        } => {
            let (model_list, default_targets) = match (&scenario_name, &models) {
                (Some(name), None) => {
                    let s = scenario(name).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown scenario `{name}` (available: dominant, indistinguishable, late-bloomer, flaky)"
                        ))
                    })?;
                    (s.models, s.default_targets)
                }
                (None, Some(path)) => {
                    let text = fs::read_to_string(path).map_err(|e| {
                        CliError::Data(format!("cannot read {}: {e}", path.display()))
                    })?;
                    let set: ModelSet = serde_json::from_str(&text).map_err(CliError::data)?;
                    (set.models, 10)
                }
                _ => {
                    return Err(CliError::Usage(
                        "exactly one of --scenario or --models is required".into(),
                    ))
                }
            };
            let n_targets = targets.unwrap_or(default_targets);
            let matrix = simulate(
                &model_list,
                &scenario_targets(n_targets),
                &seed_set_id,
                trials,
                cap,
                rng_seed,
            )
            .map_err(CliError::data)?;
            let db = db.unwrap_or_else(|| out.join("matrix.json"));
            model::save(&matrix, &db).map_err(CliError::data)?;
            println!(
                "wrote {} ({} records: {} fuzzers x {} targets x {} trials)",
                db.display(),
                matrix.len(),
                matrix.fuzzers().len(),
                n_targets,
                trials
            );
            Ok(())
        }
        Command::RunCampaign { spec } => {
            let spec = CampaignSpec::load(&spec).map_err(CliError::data)?;
            let report = run_campaign(&spec).map_err(CliError::data)?;
            for result in &report.results {
                let outcome = match result.termination {
                    Termination::Found => format!(
                        "found at {:.3}s",
                        result.record.outcome.found_at().unwrap_or(f64::NAN)
                    ),
                    Termination::Timeout => "not found (timeout)".to_string(),
                    Termination::FuzzerError => {
                        format!("fuzzer error after {} restarts", result.restarts)
                    }
                };
                println!("trial {}: {outcome}", result.record.trial_index);
            }
            for failure in &report.failures {
                eprintln!("trial {} failed: {}", failure.trial_index, failure.message);
            }
            let fragment = spec.output_dir.join("matrix.json");
            model::save(&report.matrix, &fragment).map_err(CliError::data)?;
            println!(
                "appended {} record(s) to {}",
                report.matrix.len(),
                report.store_path.display()
            );
            println!("wrote {}", fragment.display());
            if report.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Data(format!(
                    "{} of {} trials failed",
                    report.failures.len(),
                    spec.trials
                )))
            }
        }
        Command::Report { db, study, seed_set, samples } => {
            let matrix = load_db(&db.db)?;
            let cfg = study.to_config()?;
            let seed_set = resolve_seed_set(&matrix, &seed_set)?;

            let ranking = rank_overall(&matrix, &seed_set, &cfg).map_err(CliError::data)?;
            write_ranking(&out, &ranking)?;

            let time_series = runtime_sweep(&matrix, &seed_set, &default_time_grid(&matrix), &cfg)
                .map_err(CliError::data)?;
            write_sweep(&out, "sweep_time", &time_series, "Ranking vs maximum run-time", "run-time (s)")?;

            let max_trials = matrix.max_trials();
            let trial_grid: Vec<u32> = (1..=max_trials)
                .filter(|k| k % 5 == 0 || *k == max_trials)
                .collect();
            if trial_grid.len() >= 2 {
                let series =
                    trial_sweep(&matrix, &seed_set, &trial_grid, &cfg).map_err(CliError::data)?;
                write_sweep(&out, "sweep_trials", &series, "Ranking vs number of trials", "trials")?;
            }

            let n_targets = matrix.by_target(&seed_set).len();
            let size_grid: Vec<usize> =
                (1..=n_targets).filter(|s| s % 5 == 0 && *s < n_targets).collect();
            if !size_grid.is_empty() {
                let series = target_subsample_sweep(&matrix, &seed_set, &size_grid, samples, &cfg)
                    .map_err(CliError::data)?;
                write_sweep(&out, "sweep_targets", &series, "Ranking vs test-set size", "targets")?;
            }

            let alpha_grid = parse_grid(DEFAULT_ALPHA_GRID).expect("default grid parses");
            let (interval, dichotomous) =
                p_threshold_sweep(&matrix, &seed_set, &alpha_grid, &cfg).map_err(CliError::data)?;
            write_sweep(&out, "sweep_p_interval", &interval, "Interval ranking vs p threshold", "alpha")?;
            write_sweep(
                &out,
                "sweep_p_dichotomous",
                &dichotomous,
                "Dichotomous ranking vs p threshold",
                "alpha",
            )?;

            let effect = effect_threshold_sweep(&matrix, &seed_set, &EffectThreshold::ALL, &cfg)
                .map_err(CliError::data)?;
            write_sweep(&out, "sweep_effect", &effect, "Ranking vs effect-size threshold", "A12 threshold")?;

            let naive = naive_average_ranking(&matrix, &seed_set).map_err(CliError::data)?;
            let mut csv = String::from("fuzzer,avg_bugs_found\n");
            for (fuzzer, avg) in &naive {
                csv.push_str(&format!("{fuzzer},{avg}\n"));
            }
            write_text(&out.join("naive_rank.csv"), &csv)?;

            let spread = consistency_spread(&matrix, &seed_set);
            let mut csv = String::from("fuzzer,target,spread_seconds\n");
            for ((fuzzer, target), value) in &spread {
                if let Some(seconds) = value {
                    csv.push_str(&format!("{fuzzer},{target},{seconds}\n"));
                }
            }
            write_text(&out.join("spread.csv"), &csv)
        }
    }
}

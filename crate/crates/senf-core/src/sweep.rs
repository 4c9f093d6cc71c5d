//! Parameter sensitivity analyses: every study knob (run-time, trial count,
//! target selection, p threshold, effect-size gate) swept against the
//! resulting ranking.
//!
//! All sweeps are pure transformations of the matrix followed by re-ranking,
//! and all randomized sweeps derive their draws from `StudyConfig::rng_seed`,
//! so identical inputs give byte-identical series.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{EffectThreshold, ExperimentMatrix, StudyConfig, TestKind, TrialOutcome};
use crate::ranking::{average_ranks, rank_overall, rank_overall_on, RankError};
use crate::streams::derive_seed;

/// Stream tag separating subsample draws from any other use of the master
/// seed.
const SUBSAMPLE_STREAM_TAG: u64 = 0x5355_4253_414D_504C; // "SUBSAMPL"

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("parameter grid must be non-empty")]
    EmptyGrid,
    #[error("parameter grid must be strictly increasing")]
    GridNotIncreasing,
    #[error("truncation time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("truncation to {t}s exceeds the run-time cap {cap}s of existing records")]
    TruncationBeyondCap { t: f64, cap: f64 },
    #[error("trial prefix must be at least 1")]
    ZeroTrialPrefix,
    #[error("subsample size {size} exceeds the {available} available targets")]
    SizeExceedsTargets { size: usize, available: usize },
    #[error("subsample size must be at least 1")]
    ZeroSubsampleSize,
    #[error("at least one subsample draw is required")]
    ZeroSamples,
    #[error("alpha {0} outside (0, 1)")]
    BadAlpha(f64),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// One sweep point: the parameter value and the per-fuzzer average ranks,
/// plus the min/max envelope when the sweep subsamples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub parameter: f64,
    pub ranks: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ranks: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ranks: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSeries {
    pub parameter_name: String,
    pub points: Vec<SweepPoint>,
}

fn fmt_param(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl SweepSeries {
    /// CSV `parameter,fuzzer,mean_rank[,min_rank,max_rank]`, directly
    /// plottable.
    pub fn to_csv(&self) -> String {
        let has_envelope = self.points.iter().any(|p| p.min_ranks.is_some());
        let mut out = String::from(if has_envelope {
            "parameter,fuzzer,mean_rank,min_rank,max_rank\n"
        } else {
            "parameter,fuzzer,mean_rank\n"
        });
        for point in &self.points {
            for (fuzzer, rank) in &point.ranks {
                out.push_str(&fmt_param(point.parameter));
                out.push(',');
                out.push_str(fuzzer);
                out.push_str(&format!(",{rank}"));
                if has_envelope {
                    let min = point.min_ranks.as_ref().and_then(|m| m.get(fuzzer));
                    let max = point.max_ranks.as_ref().and_then(|m| m.get(fuzzer));
                    match (min, max) {
                        (Some(lo), Some(hi)) => out.push_str(&format!(",{lo},{hi}")),
                        _ => out.push_str(",,"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Per-fuzzer mean-rank polylines, for charting.
    pub fn series_by_fuzzer(&self) -> BTreeMap<String, Vec<(f64, f64)>> {
        let mut by_fuzzer: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for point in &self.points {
            for (fuzzer, &rank) in &point.ranks {
                by_fuzzer
                    .entry(fuzzer.clone())
                    .or_default()
                    .push((point.parameter, rank));
            }
        }
        by_fuzzer
    }
}

fn check_grid(values: &[f64]) -> Result<(), SweepError> {
    if values.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::GridNotIncreasing);
    }
    Ok(())
}

/// Restricts the matrix to the first `t` seconds of every trial: later finds
/// become not-found and every cap is rebased to `t`, so censored values tie
/// at the truncation horizon. Requires `t` at most the smallest original cap
/// (anything larger would fabricate data the trials never produced).
pub fn truncate(matrix: &ExperimentMatrix, t: f64) -> Result<ExperimentMatrix, SweepError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(SweepError::NonPositiveTime(t));
    }
    if let Some(cap) = matrix.min_cap_seconds() {
        if t > cap {
            return Err(SweepError::TruncationBeyondCap { t, cap });
        }
    }
    let records = matrix
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.outcome = match r.outcome {
                TrialOutcome::FoundAt(s) if s <= t => TrialOutcome::FoundAt(s),
                _ => TrialOutcome::NotFound,
            };
            r.cap_seconds = t;
            r
        })
        .collect();
    Ok(ExperimentMatrix::from_records(records))
}

/// Keeps only the first `k` trials (trial_index < k) of every group.
pub fn prefix_trials(matrix: &ExperimentMatrix, k: u32) -> Result<ExperimentMatrix, SweepError> {
    if k == 0 {
        return Err(SweepError::ZeroTrialPrefix);
    }
    Ok(ExperimentMatrix::from_records(
        matrix
            .records()
            .iter()
            .filter(|r| r.trial_index < k)
            .cloned()
            .collect(),
    ))
}

/// Groups that cannot supply `k` trials; `prefix_trials` keeps all their
/// records, and callers may want to surface the shortfall.
pub fn short_groups(matrix: &ExperimentMatrix, k: u32) -> Vec<(String, String, String, usize)> {
    let mut counts: BTreeMap<(&str, &str, &str), usize> = BTreeMap::new();
    for r in matrix.records() {
        *counts
            .entry((&r.fuzzer_id, &r.target_id, &r.seed_set_id))
            .or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n < k as usize)
        .map(|((f, t, s), n)| (f.to_string(), t.to_string(), s.to_string(), n))
        .collect()
}

/// Ranking as a function of the maximum run-time: one point per truncation
/// horizon.
pub fn runtime_sweep(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    times: &[f64],
    cfg: &StudyConfig,
) -> Result<SweepSeries, SweepError> {
    check_grid(times)?;
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let truncated = truncate(matrix, t)?;
        let report = rank_overall(&truncated, seed_set, cfg)?;
        points.push(SweepPoint {
            parameter: t,
            ranks: report.average_rank,
            min_ranks: None,
            max_ranks: None,
        });
    }
    Ok(SweepSeries {
        parameter_name: "max_runtime_seconds".into(),
        points,
    })
}

/// Ranking as a function of the number of trials considered: one point per
/// trial prefix.
pub fn trial_sweep(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    ks: &[u32],
    cfg: &StudyConfig,
) -> Result<SweepSeries, SweepError> {
    let as_f64: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    check_grid(&as_f64)?;
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let prefixed = prefix_trials(matrix, k)?;
        let report = rank_overall(&prefixed, seed_set, cfg)?;
        points.push(SweepPoint {
            parameter: k as f64,
            ranks: report.average_rank,
            min_ranks: None,
            max_ranks: None,
        });
    }
    Ok(SweepSeries {
        parameter_name: "trials".into(),
    points,
    })
}

/// Uniformly samples `k` distinct indices from 0..n by partial Fisher-Yates
/// and returns them sorted. The algorithm is pinned: swap positions i and
/// `random_range(i..n)` for i in 0..k, then take the first k slots.
pub fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Seed of one subsample draw; exposed so independent reimplementations can
/// reproduce the exact draw sequence.
pub fn subsample_draw_seed(rng_seed: u64, size: usize, draw: usize) -> u64 {
    derive_seed(rng_seed, &[SUBSAMPLE_STREAM_TAG, size as u64, draw as u64])
}

/// Ranking as a function of the test-set size: for each size, `n_samples`
/// random target subsets are drawn (repeats across draws allowed) and the
/// per-fuzzer mean, minimum, and maximum average rank over the draws is
/// reported. Draw j of size s uses an RNG stream derived from
/// (rng_seed, s, j), so draws are independent of each other and of the order
/// of evaluation.
pub fn target_subsample_sweep(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    sizes: &[usize],
    n_samples: usize,
    cfg: &StudyConfig,
) -> Result<SweepSeries, SweepError> {
    if n_samples == 0 {
        return Err(SweepError::ZeroSamples);
    }
    let as_f64: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    check_grid(&as_f64)?;

    // Per-target tournaments are independent of the subset, so rank every
    // target once and average per draw.
    let full = rank_overall(matrix, seed_set, cfg)?;
    let targets: Vec<&String> = full.per_target_ranks.keys().collect();
    let available = targets.len();

    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 {
            return Err(SweepError::ZeroSubsampleSize);
        }
        if size > available {
            return Err(SweepError::SizeExceedsTargets { size, available });
        }
        let draws: Vec<BTreeMap<String, f64>> = (0..n_samples)
            .into_par_iter()
            .map(|draw| {
                let seed = subsample_draw_seed(cfg.rng_seed, size, draw);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let chosen = sample_indices(&mut rng, available, size);
                let subset: BTreeMap<String, BTreeMap<String, f64>> = chosen
                    .into_iter()
                    .map(|i| {
                        let target = targets[i];
                        (target.clone(), full.per_target_ranks[target].clone())
                    })
                    .collect();
                average_ranks(&subset)
            })
            .collect();

        let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        let mut mins: BTreeMap<&str, f64> = BTreeMap::new();
        let mut maxs: BTreeMap<&str, f64> = BTreeMap::new();
        for draw in &draws {
            for (fuzzer, &rank) in draw {
                let e = sums.entry(fuzzer).or_insert((0.0, 0));
                e.0 += rank;
                e.1 += 1;
                mins.entry(fuzzer)
                    .and_modify(|m| *m = m.min(rank))
                    .or_insert(rank);
                maxs.entry(fuzzer)
                    .and_modify(|m| *m = m.max(rank))
                    .or_insert(rank);
            }
        }
        points.push(SweepPoint {
            parameter: size as f64,
            ranks: sums
                .into_iter()
                .map(|(f, (sum, n))| (f.to_string(), sum / n as f64))
                .collect(),
            min_ranks: Some(mins.into_iter().map(|(f, r)| (f.to_string(), r)).collect()),
            max_ranks: Some(maxs.into_iter().map(|(f, r)| (f.to_string(), r)).collect()),
        });
    }
    Ok(SweepSeries {
        parameter_name: "targets".into(),
        points,
    })
}

/// Ranking as a function of the significance threshold, computed for both
/// test families. Returns (interval series, dichotomous series).
pub fn p_threshold_sweep(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    alphas: &[f64],
    cfg: &StudyConfig,
) -> Result<(SweepSeries, SweepSeries), SweepError> {
    check_grid(alphas)?;
    if alphas.iter().any(|&a| !(0.0..1.0).contains(&a) || a == 0.0) {
        return Err(SweepError::BadAlpha(
            *alphas
                .iter()
                .find(|&&a| !(0.0..1.0).contains(&a) || a == 0.0)
                .unwrap(),
        ));
    }
    let mut interval_points = Vec::with_capacity(alphas.len());
    let mut dichotomous_points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        for (kind, points) in [
            (TestKind::Interval, &mut interval_points),
            (TestKind::Dichotomous, &mut dichotomous_points),
        ] {
            let sub_cfg = StudyConfig {
                alpha,
                test_kind: kind,
                ..*cfg
            };
            let report = rank_overall(matrix, seed_set, &sub_cfg)?;
            points.push(SweepPoint {
                parameter: alpha,
                ranks: report.average_rank,
                min_ranks: None,
                max_ranks: None,
            });
        }
    }
    Ok((
        SweepSeries {
            parameter_name: "alpha".into(),
            points: interval_points,
        },
        SweepSeries {
            parameter_name: "alpha".into(),
            points: dichotomous_points,
        },
    ))
}

/// Interval ranking as a function of the effect-size gate. The parameter
/// axis carries the conventional A12 value of each level (none maps to 0.5).
pub fn effect_threshold_sweep(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    thresholds: &[EffectThreshold],
    cfg: &StudyConfig,
) -> Result<SweepSeries, SweepError> {
    let as_f64: Vec<f64> = thresholds.iter().map(|t| t.a12_value()).collect();
    check_grid(&as_f64)?;
    let mut points = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let sub_cfg = StudyConfig {
            effect_threshold: threshold,
            test_kind: TestKind::Interval,
            ..*cfg
        };
        let report = rank_overall(matrix, seed_set, &sub_cfg)?;
        points.push(SweepPoint {
            parameter: threshold.a12_value(),
            ranks: report.average_rank,
            min_ranks: None,
            max_ranks: None,
        });
    }
    Ok(SweepSeries {
        parameter_name: "effect_threshold".into(),
        points,
    })
}

/// Convenience wrapper used by sweeps restricted to explicit target subsets.
pub fn rank_on_targets(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    targets: &BTreeSet<&str>,
    cfg: &StudyConfig,
) -> Result<BTreeMap<String, f64>, SweepError> {
    Ok(rank_overall_on(matrix, seed_set, Some(targets), cfg)?.average_rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrialRecord;
    use crate::simulate::{scenario, scenario_targets, simulate};

    fn record(fuzzer: &str, target: &str, trial: u32, outcome: TrialOutcome, cap: f64) -> TrialRecord {
        TrialRecord {
            fuzzer_id: fuzzer.into(),
            target_id: target.into(),
            seed_set_id: "s".into(),
            trial_index: trial,
            outcome,
            cap_seconds: cap,
        }
    }

    #[test]
    fn truncate_keeps_early_finds_and_rebases_cap() {
        let m = ExperimentMatrix::from_records(vec![record(
            "f",
            "T01",
            0,
            TrialOutcome::FoundAt(3600.0),
            86400.0,
        )]);
        let t = truncate(&m, 7200.0).unwrap();
        assert_eq!(t.records()[0].outcome, TrialOutcome::FoundAt(3600.0));
        assert_eq!(t.records()[0].cap_seconds, 7200.0);
    }

    #[test]
    fn truncate_censors_late_finds() {
        let m = ExperimentMatrix::from_records(vec![record(
            "f",
            "T01",
            0,
            TrialOutcome::FoundAt(10_000.0),
            86400.0,
        )]);
        let t = truncate(&m, 3600.0).unwrap();
        assert_eq!(t.records()[0].outcome, TrialOutcome::NotFound);
        assert_eq!(t.records()[0].cap_seconds, 3600.0);
    }

    #[test]
    fn truncate_at_cap_is_identity() {
        let m = ExperimentMatrix::from_records(vec![
            record("f", "T01", 0, TrialOutcome::FoundAt(3600.0), 86400.0),
            record("f", "T01", 1, TrialOutcome::NotFound, 86400.0),
        ]);
        assert_eq!(truncate(&m, 86400.0).unwrap(), m);
    }

    #[test]
    fn truncate_beyond_cap_is_rejected() {
        let m = ExperimentMatrix::from_records(vec![record(
            "f",
            "T01",
            0,
            TrialOutcome::NotFound,
            3600.0,
        )]);
        assert!(matches!(
            truncate(&m, 7200.0),
            Err(SweepError::TruncationBeyondCap { .. })
        ));
    }

    #[test]
    fn truncate_is_idempotent_and_composes() {
        let m = scenario("flaky")
            .unwrap()
            .simulate(5, "s", 10, 86400.0, 3)
            .unwrap();
        let t1 = truncate(&m, 3600.0).unwrap();
        assert_eq!(truncate(&t1, 3600.0).unwrap(), t1);
        let via_t2 = truncate(&truncate(&m, 7200.0).unwrap(), 3600.0).unwrap();
        assert_eq!(via_t2, t1);
    }

    #[test]
    fn prefix_trials_composes() {
        let m = scenario("flaky")
            .unwrap()
            .simulate(5, "s", 30, 86400.0, 3)
            .unwrap();
        assert_eq!(prefix_trials(&m, 30).unwrap(), m);
        let p5 = prefix_trials(&m, 5).unwrap();
        assert_eq!(prefix_trials(&prefix_trials(&m, 10).unwrap(), 5).unwrap(), p5);
        assert_eq!(p5.max_trials(), 5);
    }

    #[test]
    fn prefix_trials_flags_short_groups() {
        let m = ExperimentMatrix::from_records(vec![
            record("f", "T01", 0, TrialOutcome::NotFound, 10.0),
            record("f", "T01", 1, TrialOutcome::NotFound, 10.0),
        ]);
        assert_eq!(prefix_trials(&m, 5).unwrap(), m);
        let short = short_groups(&m, 5);
        assert_eq!(short.len(), 1);
        assert_eq!(short[0].3, 2);
        assert!(matches!(prefix_trials(&m, 0), Err(SweepError::ZeroTrialPrefix)));
    }

    #[test]
    fn runtime_sweep_single_cap_point_matches_full_ranking() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(5, "s", 30, 86400.0, 42)
            .unwrap();
        let cfg = StudyConfig::default();
        let series = runtime_sweep(&m, "s", &[86400.0], &cfg).unwrap();
        let full = rank_overall(&m, "s", &cfg).unwrap();
        assert_eq!(series.points.len(), 1);
        assert_eq!(series.points[0].ranks, full.average_rank);
    }

    #[test]
    fn runtime_sweep_rejects_empty_grid() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(2, "s", 5, 86400.0, 42)
            .unwrap();
        assert!(matches!(
            runtime_sweep(&m, "s", &[], &StudyConfig::default()),
            Err(SweepError::EmptyGrid)
        ));
    }

    #[test]
    fn trial_sweep_identity_at_max() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(4, "s", 30, 86400.0, 42)
            .unwrap();
        let cfg = StudyConfig::default();
        let series = trial_sweep(&m, "s", &[5, 30], &cfg).unwrap();
        let full = rank_overall(&m, "s", &cfg).unwrap();
        assert_eq!(series.points[1].ranks, full.average_rank);
    }

    #[test]
    fn single_trial_equal_values_never_significant() {
        // k = 1 leaves singleton samples; equal singletons give p = 1.
        let mut records = Vec::new();
        for f in ["a", "b"] {
            for trial in 0..10 {
                records.push(record(f, "T01", trial, TrialOutcome::FoundAt(50.0), 100.0));
            }
        }
        let m = ExperimentMatrix::from_records(records);
        let cfg = StudyConfig::default();
        let series = trial_sweep(&m, "s", &[1], &cfg).unwrap();
        assert!(series.points[0].ranks.values().all(|&r| r == 1.5));
    }

    #[test]
    fn subsample_full_size_collapses_envelope() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(6, "s", 20, 86400.0, 42)
            .unwrap();
        let cfg = StudyConfig::default();
        let series = target_subsample_sweep(&m, "s", &[6], 50, &cfg).unwrap();
        let point = &series.points[0];
        let full = rank_overall(&m, "s", &cfg).unwrap();
        for (fuzzer, &mean) in &point.ranks {
            let expect = full.average_rank[fuzzer];
            assert_eq!(point.min_ranks.as_ref().unwrap()[fuzzer], expect);
            assert_eq!(point.max_ranks.as_ref().unwrap()[fuzzer], expect);
            assert!((mean - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn subsample_is_deterministic_per_seed() {
        let m = scenario("flaky")
            .unwrap()
            .simulate(8, "s", 20, 86400.0, 42)
            .unwrap();
        let cfg = StudyConfig::default();
        let a = target_subsample_sweep(&m, "s", &[3, 5], 40, &cfg).unwrap();
        let b = target_subsample_sweep(&m, "s", &[3, 5], 40, &cfg).unwrap();
        assert_eq!(a, b);
        let other_seed = StudyConfig {
            rng_seed: 43,
            ..cfg
        };
        let c = target_subsample_sweep(&m, "s", &[3, 5], 40, &other_seed).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subsample_size_beyond_targets_rejected() {
        let m = scenario("flaky")
            .unwrap()
            .simulate(4, "s", 10, 86400.0, 42)
            .unwrap();
        assert!(matches!(
            target_subsample_sweep(&m, "s", &[5], 10, &StudyConfig::default()),
            Err(SweepError::SizeExceedsTargets { size: 5, available: 4 })
        ));
    }

    #[test]
    fn p_sweep_unattainable_alpha_collapses_ranks() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(5, "s", 30, 86400.0, 42)
            .unwrap();
        let cfg = StudyConfig::default();
        let (interval, dichotomous) =
            p_threshold_sweep(&m, "s", &[5e-300, 0.05], &cfg).unwrap();
        for series in [&interval, &dichotomous] {
            let collapsed = &series.points[0].ranks;
            let k = collapsed.len() as f64;
            assert!(collapsed.values().all(|&r| r == (k + 1.0) / 2.0));
        }
        // At the default threshold the dominant fuzzer leads.
        assert_eq!(interval.points[1].ranks["dominant"], 1.0);
    }

    #[test]
    fn p_sweep_rejects_bad_alpha() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(2, "s", 5, 86400.0, 42)
            .unwrap();
        assert!(matches!(
            p_threshold_sweep(&m, "s", &[0.05, 1.5], &StudyConfig::default()),
            Err(SweepError::BadAlpha(_))
        ));
    }

    #[test]
    fn effect_sweep_default_grid() {
        let m = scenario("dominant")
            .unwrap()
            .simulate(5, "s", 30, 86400.0, 42)
            .unwrap();
        let cfg = StudyConfig::default();
        let series = effect_threshold_sweep(&m, "s", &EffectThreshold::ALL, &cfg).unwrap();
        assert_eq!(series.points.len(), 4);
        // threshold `none` reproduces the default ranking
        let full = rank_overall(&m, "s", &cfg).unwrap();
        assert_eq!(series.points[0].ranks, full.average_rank);
        // Full separation keeps the dominant fuzzer at rank 1 even under the
        // large-effect gate.
        assert_eq!(series.points[3].ranks["dominant"], 1.0);
    }

    #[test]
    fn sweeps_conserve_rank_sums() {
        let m = simulate(
            &scenario("flaky").unwrap().models,
            &scenario_targets(6),
            "s",
            25,
            86400.0,
            5,
        )
        .unwrap();
        let cfg = StudyConfig::default();
        let series = runtime_sweep(&m, "s", &[3600.0, 43200.0, 86400.0], &cfg).unwrap();
        for point in &series.points {
            let k = point.ranks.len() as f64;
            let sum: f64 = point.ranks.values().sum();
            assert!((sum - k * (k + 1.0) / 2.0).abs() < 1e-9);
        }
    }
}

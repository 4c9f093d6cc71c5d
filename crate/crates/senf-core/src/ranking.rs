//! Tournament ranking of fuzzers from an experiment matrix.
//!
//! Per target, every unordered fuzzer pair is compared once with the
//! configured statistical test; a pair yields a directed verdict only when
//! the p-value clears `alpha` and the effect clears the configured gate.
//! Win counts become fractional ranks, and a fuzzer's score is its average
//! rank over all targets — the fuzzer that finds the most bugs the fastest
//! on the most targets ranks first.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ExperimentMatrix, StudyConfig, TestKind, TrialRecord};
use crate::stats::{
    a12, fisher_exact_p, fractional_ranks, mwu_p, odds_ratio, ContingencyTable2x2, PValue, Sample,
    StatError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("no trials for fuzzer `{fuzzer}` on ({target}, {seed_set})")]
    NoTrials {
        fuzzer: String,
        target: String,
        seed_set: String,
    },
    #[error("target `{target}` has {found} fuzzers with trials; at least 2 required")]
    NotEnoughFuzzers { target: String, found: usize },
    #[error("seed set `{0}` has no targets")]
    EmptySeedSet(String),
    #[error("seed sets have no common targets for any fuzzer")]
    DisjointSeedSets,
    #[error("dichotomous counts invalid: found {found} of {n}")]
    InvalidCounts { found: u64, n: u64 },
    #[error(transparent)]
    Stat(#[from] StatError),
}

/// Outcome direction of one pairwise verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ABetter,
    BBetter,
    None,
}

/// One pairwise statistical verdict: p-value, effect size, and the directed
/// conclusion (if any) after significance and effect gating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub fuzzer_a: String,
    pub fuzzer_b: String,
    pub p: PValue,
    /// A12 for interval comparisons, odds ratio for dichotomous ones.
    pub effect: f64,
    pub direction: Direction,
    pub kind: TestKind,
}

/// Per-target fractional ranks and the cross-target average rank per fuzzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub per_target_ranks: BTreeMap<String, BTreeMap<String, f64>>,
    pub average_rank: BTreeMap<String, f64>,
    pub config: StudyConfig,
}

impl RankingReport {
    /// Flat CSV `fuzzer,average_rank`, best rank first.
    pub fn average_csv(&self) -> String {
        let mut rows: Vec<(&String, f64)> =
            self.average_rank.iter().map(|(f, &r)| (f, r)).collect();
        rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));
        let mut out = String::from("fuzzer,average_rank\n");
        for (fuzzer, rank) in rows {
            out.push_str(&format!("{fuzzer},{rank}\n"));
        }
        out
    }

    /// Flat CSV `target,fuzzer,rank`.
    pub fn per_target_csv(&self) -> String {
        let mut out = String::from("target,fuzzer,rank\n");
        for (target, ranks) in &self.per_target_ranks {
            let mut rows: Vec<(&String, f64)> = ranks.iter().map(|(f, &r)| (f, r)).collect();
            rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));
            for (fuzzer, rank) in rows {
                out.push_str(&format!("{target},{fuzzer},{rank}\n"));
            }
        }
        out
    }
}

/// Censored time-to-bug sample for one (fuzzer, target, seed_set) group:
/// found trials contribute their time, not-found trials the run-time cap.
pub fn interval_sample(
    matrix: &ExperimentMatrix,
    fuzzer: &str,
    target: &str,
    seed_set: &str,
) -> Result<Sample, RankError> {
    let group = matrix.group(fuzzer, target, seed_set);
    sample_from_group(&group).ok_or_else(|| RankError::NoTrials {
        fuzzer: fuzzer.to_string(),
        target: target.to_string(),
        seed_set: seed_set.to_string(),
    })
}

fn sample_from_group(group: &[&TrialRecord]) -> Option<Sample> {
    if group.is_empty() {
        return None;
    }
    Sample::new(group.iter().map(|r| r.censored_seconds()).collect()).ok()
}

fn found_counts(group: &[&TrialRecord]) -> (u64, u64) {
    let found = group.iter().filter(|r| r.outcome.is_found()).count() as u64;
    (found, group.len() as u64)
}

/// Interval-scale verdict: two-sided Mann-Whitney-U p-value and A12 effect.
/// Lower times are better, so A12 below 0.5 favors `a`. A directed verdict
/// additionally requires |A12 - 0.5| to clear the configured effect gate.
pub fn compare_interval(
    fuzzer_a: &str,
    a: &Sample,
    fuzzer_b: &str,
    b: &Sample,
    cfg: &StudyConfig,
) -> Result<Comparison, RankError> {
    let p = mwu_p(a, b, cfg.mwu_mode, cfg.exact_size_limit)?;
    let effect = a12(a, b);
    let gate = cfg.effect_threshold.gate_distance();
    let direction = if p.value < cfg.alpha {
        if effect < 0.5 && (0.5 - effect) >= gate {
            Direction::ABetter
        } else if effect > 0.5 && (effect - 0.5) >= gate {
            Direction::BBetter
        } else {
            Direction::None
        }
    } else {
        Direction::None
    };
    Ok(Comparison {
        fuzzer_a: fuzzer_a.to_string(),
        fuzzer_b: fuzzer_b.to_string(),
        p,
        effect,
        direction,
        kind: TestKind::Interval,
    })
}

/// Dichotomous verdict: Fisher exact p-value and odds ratio over the
/// found/not-found table. An odds ratio above 1 favors `a`. The A12 effect
/// gate does not apply here; an explicit odds-ratio gate may be configured.
pub fn compare_dichotomous(
    fuzzer_a: &str,
    a_found: u64,
    a_n: u64,
    fuzzer_b: &str,
    b_found: u64,
    b_n: u64,
    cfg: &StudyConfig,
) -> Result<Comparison, RankError> {
    if a_n == 0 || a_found > a_n {
        return Err(RankError::InvalidCounts {
            found: a_found,
            n: a_n,
        });
    }
    if b_n == 0 || b_found > b_n {
        return Err(RankError::InvalidCounts {
            found: b_found,
            n: b_n,
        });
    }
    let table = ContingencyTable2x2::new(a_found, a_n - a_found, b_found, b_n - b_found)?;
    let p = fisher_exact_p(&table);
    let effect = odds_ratio(&table);
    let gate_ok = |or: f64| match cfg.odds_ratio_gate {
        Some(gate) => or >= gate || or <= 1.0 / gate,
        None => true,
    };
    let direction = if p.value < cfg.alpha && effect > 1.0 && gate_ok(effect) {
        Direction::ABetter
    } else if p.value < cfg.alpha && effect < 1.0 && gate_ok(effect) {
        Direction::BBetter
    } else {
        Direction::None
    };
    Ok(Comparison {
        fuzzer_a: fuzzer_a.to_string(),
        fuzzer_b: fuzzer_b.to_string(),
        p,
        effect,
        direction,
        kind: TestKind::Dichotomous,
    })
}

fn compare_groups(
    fuzzer_a: &str,
    group_a: &[&TrialRecord],
    fuzzer_b: &str,
    group_b: &[&TrialRecord],
    cfg: &StudyConfig,
) -> Result<Comparison, RankError> {
    match cfg.test_kind {
        TestKind::Interval => {
            let a = sample_from_group(group_a).ok_or(StatError::EmptySample)?;
            let b = sample_from_group(group_b).ok_or(StatError::EmptySample)?;
            compare_interval(fuzzer_a, &a, fuzzer_b, &b, cfg)
        }
        TestKind::Dichotomous => {
            let (af, an) = found_counts(group_a);
            let (bf, bn) = found_counts(group_b);
            compare_dichotomous(fuzzer_a, af, an, fuzzer_b, bf, bn, cfg)
        }
    }
}

/// All pairwise verdicts of one target's tournament, pairs in lexicographic
/// fuzzer order.
pub fn target_comparisons(
    matrix: &ExperimentMatrix,
    target: &str,
    seed_set: &str,
    cfg: &StudyConfig,
) -> Result<Vec<Comparison>, RankError> {
    let grouped = matrix.by_target(seed_set);
    let per_fuzzer = grouped
        .get(target)
        .ok_or_else(|| RankError::EmptySeedSet(seed_set.to_string()))?;
    tournament(per_fuzzer, cfg).map(|(_, comparisons)| comparisons)
}

/// Pairwise verdicts of every target's tournament in one seed set.
pub fn seed_set_comparisons(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    cfg: &StudyConfig,
) -> Result<BTreeMap<String, Vec<Comparison>>, RankError> {
    let grouped = matrix.by_target(seed_set);
    if grouped.is_empty() {
        return Err(RankError::EmptySeedSet(seed_set.to_string()));
    }
    grouped
        .iter()
        .map(|(target, per_fuzzer)| {
            tournament(per_fuzzer, cfg).map(|(_, comparisons)| (target.to_string(), comparisons))
        })
        .collect()
}

/// Runs one target's tournament over the fuzzers present: pairwise verdicts,
/// win counts, fractional ranks (equal win counts share the mean rank of
/// their block). Fuzzers with zero trials on the target are not ranked.
fn tournament(
    per_fuzzer: &BTreeMap<&str, Vec<&TrialRecord>>,
    cfg: &StudyConfig,
) -> Result<(BTreeMap<String, f64>, Vec<Comparison>), RankError> {
    let fuzzers: Vec<&str> = per_fuzzer.keys().copied().collect();
    let mut wins: BTreeMap<&str, u32> = fuzzers.iter().map(|f| (*f, 0)).collect();
    let mut comparisons = Vec::new();
    for i in 0..fuzzers.len() {
        for j in i + 1..fuzzers.len() {
            let (fa, fb) = (fuzzers[i], fuzzers[j]);
            let cmp = compare_groups(fa, &per_fuzzer[fa], fb, &per_fuzzer[fb], cfg)?;
            match cmp.direction {
                Direction::ABetter => *wins.get_mut(fa).unwrap() += 1,
                Direction::BBetter => *wins.get_mut(fb).unwrap() += 1,
                Direction::None => {}
            }
            comparisons.push(cmp);
        }
    }
    // Rank 1 goes to the most wins: fractional ranks of the negated counts.
    let keys: Vec<f64> = fuzzers.iter().map(|f| -(wins[f] as f64)).collect();
    let ranks = fractional_ranks(&keys)?;
    let ranked = fuzzers
        .iter()
        .zip(ranks)
        .map(|(f, r)| (f.to_string(), r))
        .collect();
    Ok((ranked, comparisons))
}

/// Fractional ranks of one target's tournament; requires at least two
/// fuzzers with trials.
pub fn rank_target(
    matrix: &ExperimentMatrix,
    target: &str,
    seed_set: &str,
    cfg: &StudyConfig,
) -> Result<BTreeMap<String, f64>, RankError> {
    let grouped = matrix.by_target(seed_set);
    let per_fuzzer = grouped
        .get(target)
        .ok_or_else(|| RankError::EmptySeedSet(seed_set.to_string()))?;
    if per_fuzzer.len() < 2 {
        return Err(RankError::NotEnoughFuzzers {
            target: target.to_string(),
            found: per_fuzzer.len(),
        });
    }
    tournament(per_fuzzer, cfg).map(|(ranks, _)| ranks)
}

/// Full ranking over every target of a seed set; see `rank_overall`.
/// `targets` restricts the tournament to a subset when given.
pub fn rank_overall_on(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    targets: Option<&BTreeSet<&str>>,
    cfg: &StudyConfig,
) -> Result<RankingReport, RankError> {
    let grouped = matrix.by_target(seed_set);
    if grouped.is_empty() {
        return Err(RankError::EmptySeedSet(seed_set.to_string()));
    }
    let mut per_target_ranks: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (target, per_fuzzer) in &grouped {
        if let Some(subset) = targets {
            if !subset.contains(target) {
                continue;
            }
        }
        let (ranks, _) = tournament(per_fuzzer, cfg)?;
        per_target_ranks.insert(target.to_string(), ranks);
    }
    if per_target_ranks.is_empty() {
        return Err(RankError::EmptySeedSet(seed_set.to_string()));
    }
    Ok(RankingReport {
        average_rank: average_ranks(&per_target_ranks),
        per_target_ranks,
        config: *cfg,
    })
}

/// Arithmetic mean of a fuzzer's per-target ranks, over the targets where it
/// was ranked.
pub fn average_ranks(
    per_target_ranks: &BTreeMap<String, BTreeMap<String, f64>>,
) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for ranks in per_target_ranks.values() {
        for (fuzzer, &rank) in ranks {
            let entry = sums.entry(fuzzer).or_insert((0.0, 0));
            entry.0 += rank;
            entry.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(f, (sum, n))| (f.to_string(), sum / n as f64))
        .collect()
}

/// The final score: per-target tournaments followed by the cross-target
/// average rank of each fuzzer.
pub fn rank_overall(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    cfg: &StudyConfig,
) -> Result<RankingReport, RankError> {
    rank_overall_on(matrix, seed_set, None, cfg)
}

/// Naive baseline: each fuzzer's average number of targets with a found bug
/// per trial index. Trials missing on a target count as not-found.
pub fn naive_average_ranking(
    matrix: &ExperimentMatrix,
    seed_set: &str,
) -> Result<BTreeMap<String, f64>, RankError> {
    let mut found_total: BTreeMap<&str, u64> = BTreeMap::new();
    let mut trial_indices: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for r in matrix.records() {
        if r.seed_set_id != seed_set {
            continue;
        }
        trial_indices
            .entry(r.fuzzer_id.as_str())
            .or_default()
            .insert(r.trial_index);
        if r.outcome.is_found() {
            *found_total.entry(r.fuzzer_id.as_str()).or_default() += 1;
        }
    }
    if trial_indices.is_empty() {
        return Err(RankError::EmptySeedSet(seed_set.to_string()));
    }
    Ok(trial_indices
        .into_iter()
        .map(|(fuzzer, indices)| {
            let found = *found_total.get(fuzzer).unwrap_or(&0);
            (fuzzer.to_string(), found as f64 / indices.len() as f64)
        })
        .collect())
}

/// Per (fuzzer, target): spread between the shortest and longest censored
/// time over all trials; `None` (omitted) when no trial found the bug.
pub fn consistency_spread(
    matrix: &ExperimentMatrix,
    seed_set: &str,
) -> BTreeMap<(String, String), Option<f64>> {
    let grouped = matrix.by_target(seed_set);
    let mut out = BTreeMap::new();
    for (target, per_fuzzer) in grouped {
        for (fuzzer, records) in per_fuzzer {
            let spread = if records.iter().any(|r| r.outcome.is_found()) {
                let times: Vec<f64> = records.iter().map(|r| r.censored_seconds()).collect();
                let min = times.iter().copied().fold(f64::INFINITY, f64::min);
                let max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some(max - min)
            } else {
                None
            };
            out.insert((fuzzer.to_string(), target.to_string()), spread);
        }
    }
    out
}

/// Directed-win counts of one fuzzer's seed-set contrast, per test family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContrastCounts {
    pub interval_a: u32,
    pub interval_b: u32,
    pub dichotomous_a: u32,
    pub dichotomous_b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSetContrast {
    pub seed_a: String,
    pub seed_b: String,
    pub per_fuzzer: BTreeMap<String, ContrastCounts>,
    pub warnings: Vec<String>,
}

impl SeedSetContrast {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "fuzzer,interval_wins_a,interval_wins_b,dichotomous_wins_a,dichotomous_wins_b\n",
        );
        for (fuzzer, c) in &self.per_fuzzer {
            out.push_str(&format!(
                "{fuzzer},{},{},{},{}\n",
                c.interval_a, c.interval_b, c.dichotomous_a, c.dichotomous_b
            ));
        }
        out
    }
}

/// Per fuzzer, counts the targets where its runs under `seed_a` beat its
/// runs under `seed_b` (and vice versa), under both test families. Only
/// targets covered by both seed sets are compared.
pub fn seed_set_contrast(
    matrix: &ExperimentMatrix,
    seed_a: &str,
    seed_b: &str,
    cfg: &StudyConfig,
) -> Result<SeedSetContrast, RankError> {
    let grouped_a = matrix.by_target(seed_a);
    let grouped_b = matrix.by_target(seed_b);
    if grouped_a.is_empty() {
        return Err(RankError::EmptySeedSet(seed_a.to_string()));
    }
    if grouped_b.is_empty() {
        return Err(RankError::EmptySeedSet(seed_b.to_string()));
    }

    let fuzzers: BTreeSet<&str> = grouped_a
        .values()
        .chain(grouped_b.values())
        .flat_map(|per_fuzzer| per_fuzzer.keys().copied())
        .collect();

    let mut per_fuzzer = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut any_common = false;
    for fuzzer in fuzzers {
        let mut counts = ContrastCounts::default();
        let mut common_targets = 0usize;
        for (target, per_fuzzer_a) in &grouped_a {
            let (Some(group_a), Some(group_b)) = (
                per_fuzzer_a.get(fuzzer),
                grouped_b.get(target).and_then(|m| m.get(fuzzer)),
            ) else {
                continue;
            };
            common_targets += 1;

            let interval_cfg = StudyConfig {
                test_kind: TestKind::Interval,
                ..*cfg
            };
            match compare_groups(seed_a, group_a, seed_b, group_b, &interval_cfg)?.direction {
                Direction::ABetter => counts.interval_a += 1,
                Direction::BBetter => counts.interval_b += 1,
                Direction::None => {}
            }
            let dicho_cfg = StudyConfig {
                test_kind: TestKind::Dichotomous,
                ..*cfg
            };
            match compare_groups(seed_a, group_a, seed_b, group_b, &dicho_cfg)?.direction {
                Direction::ABetter => counts.dichotomous_a += 1,
                Direction::BBetter => counts.dichotomous_b += 1,
                Direction::None => {}
            }
        }
        if common_targets == 0 {
            warnings.push(format!(
                "fuzzer {fuzzer}: no target covered by both `{seed_a}` and `{seed_b}`"
            ));
        } else {
            any_common = true;
        }
        per_fuzzer.insert(fuzzer.to_string(), counts);
    }
    if !any_common {
        return Err(RankError::DisjointSeedSets);
    }
    Ok(SeedSetContrast {
        seed_a: seed_a.to_string(),
        seed_b: seed_b.to_string(),
        per_fuzzer,
        warnings,
    })
}

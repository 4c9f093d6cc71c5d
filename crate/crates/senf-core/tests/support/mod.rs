//! Independent oracles for the acceptance and property suites.
//!
//! Each oracle recomputes a result through a route disjoint from the library
//! implementation: the Mann-Whitney oracle counts pairs per enumerated
//! assignment instead of summing pooled ranks, the Fisher oracle works in
//! exact integer arithmetic instead of log space, the tournament oracle
//! re-derives ranks from raw verdicts, and the subsample oracle re-ranks
//! filtered matrices instead of averaging cached per-target ranks.

// Shared by several test binaries; each uses its own subset.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use senf_core::model::{ExperimentMatrix, StudyConfig};
use senf_core::ranking::{rank_overall, Comparison, Direction};
use senf_core::sweep::subsample_draw_seed;

/// Doubled U statistic by direct pair counting: 2*wins + ties.
fn u2_paircount(x: &[f64], y: &[f64]) -> i64 {
    let mut w = 0i64;
    for &a in x {
        for &b in y {
            if a > b {
                w += 2;
            } else if a == b {
                w += 1;
            }
        }
    }
    w
}

/// Brute-force two-sided exact Mann-Whitney: enumerates every assignment of
/// the pooled values to group X and counts the assignments whose U is at
/// least as far from mn/2 as the observed one. Returns (extreme, total).
pub fn mwu_oracle_counts(x: &[f64], y: &[f64]) -> (u64, u64) {
    let m = x.len();
    let n = y.len();
    let pooled: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
    let mn = (m * n) as i64;
    let observed = (u2_paircount(x, y) - mn).abs();

    let total_len = m + n;
    let mut combo: Vec<usize> = (0..m).collect();
    let mut extreme = 0u64;
    let mut total = 0u64;
    loop {
        let xs: Vec<f64> = combo.iter().map(|&i| pooled[i]).collect();
        let ys: Vec<f64> = (0..total_len)
            .filter(|i| !combo.contains(i))
            .map(|i| pooled[i])
            .collect();
        if (u2_paircount(&xs, &ys) - mn).abs() >= observed {
            extreme += 1;
        }
        total += 1;

        let mut i = m;
        loop {
            if i == 0 {
                return (extreme, total);
            }
            i -= 1;
            if combo[i] != i + total_len - m {
                break;
            }
        }
        combo[i] += 1;
        for j in i + 1..m {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

pub fn mwu_oracle_p(x: &[f64], y: &[f64]) -> f64 {
    let (extreme, total) = mwu_oracle_counts(x, y);
    extreme as f64 / total as f64
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c * (n - k + i) / i;
    }
    c
}

/// Two-sided Fisher exact p by integer hypergeometric enumeration: sums the
/// weights C(r1,k)*C(r2,c1-k) of every table whose weight is at most the
/// observed table's, in exact u128 arithmetic.
pub fn fisher_oracle_p(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let r1 = a + b;
    let r2 = c + d;
    let c1 = a + c;
    let n = r1 + r2;
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let weight = |k: u64| binomial_u128(r1, k) * binomial_u128(r2, c1 - k);
    let observed = weight(a);
    let included: u128 = (lo..=hi).map(weight).filter(|&w| w <= observed).sum();
    included as f64 / binomial_u128(n, c1) as f64
}

/// Re-derives fractional ranks from raw pairwise verdicts: count wins per
/// fuzzer, order by wins, give each block of equal win counts the mean of
/// the positions it spans.
pub fn ranks_from_verdicts_oracle(
    fuzzers: &[String],
    comparisons: &[Comparison],
) -> BTreeMap<String, f64> {
    let mut wins: BTreeMap<&str, u32> = fuzzers.iter().map(|f| (f.as_str(), 0)).collect();
    for cmp in comparisons {
        match cmp.direction {
            Direction::ABetter => *wins.get_mut(cmp.fuzzer_a.as_str()).unwrap() += 1,
            Direction::BBetter => *wins.get_mut(cmp.fuzzer_b.as_str()).unwrap() += 1,
            Direction::None => {}
        }
    }
    let mut ordered: Vec<(&str, u32)> = wins.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut ranks = BTreeMap::new();
    let mut start = 0;
    while start < ordered.len() {
        let mut end = start + 1;
        while end < ordered.len() && ordered[end].1 == ordered[start].1 {
            end += 1;
        }
        // Positions start+1 ..= end share the mean rank of the block.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &(fuzzer, _) in &ordered[start..end] {
            ranks.insert(fuzzer.to_string(), mean);
        }
        start = end;
    }
    ranks
}

/// Writes an executable shell script for harness stubs; returns its path.
pub fn write_script(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}")).unwrap();
    let mut perms = std::fs::metadata(&path).unwrap().permissions();
    perms.set_mode(0o755);
    std::fs::set_permissions(&path, perms).unwrap();
    path
}

/// Independent re-implementation of one subsample draw: same seed
/// derivation and the same pinned partial Fisher-Yates, but the ranking is
/// recomputed from a record-filtered matrix instead of averaging cached
/// per-target ranks.
pub fn subsample_draw_oracle(
    matrix: &ExperimentMatrix,
    seed_set: &str,
    targets: &[String],
    size: usize,
    draw: usize,
    cfg: &StudyConfig,
) -> BTreeMap<String, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(subsample_draw_seed(cfg.rng_seed, size, draw));
    let mut pool: Vec<usize> = (0..targets.len()).collect();
    for i in 0..size {
        let j = rand::Rng::random_range(&mut rng, i..pool.len());
        pool.swap(i, j);
    }
    let chosen: Vec<&String> = pool[..size].iter().map(|&i| &targets[i]).collect();

    let filtered = ExperimentMatrix::from_records(
        matrix
            .records()
            .iter()
            .filter(|r| chosen.iter().any(|t| **t == r.target_id))
            .cloned()
            .collect(),
    );
    rank_overall(&filtered, seed_set, cfg)
        .expect("subset ranking")
        .average_rank
}

//! Nonparametric statistics for pairwise fuzzer comparison.
//!
//! Interval-scale results (time-to-bug) are compared with the two-sided
//! Mann-Whitney-U test and the Vargha-Delaney A12 effect size; dichotomous
//! results (bug found / not found) with the Fisher exact test and the odds
//! ratio. All functions are pure and deterministic.
//!
//! Note that no multiple-testing correction is applied anywhere: a campaign
//! with many targets and fuzzers runs hundreds of pairwise tests, so the
//! per-comparison false-positive rate compounds. Callers who need family-wise
//! control must lower `alpha` themselves.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Exact Mann-Whitney enumeration is refused above this combined size;
/// C(64, 32) still fits in a u64, anything larger cannot be counted exactly.
const EXACT_ENUMERATION_HARD_LIMIT: usize = 64;

/// Relative tolerance used when deciding whether a table's point probability
/// is "at most" the observed one in the two-sided Fisher sum. Absorbs the
/// rounding of log-space hypergeometric terms so that exactly-tied tables
/// (which occur for every symmetric margin set) are always included.
const FISHER_TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("sample must be non-empty")]
    EmptySample,
    #[error("sample values must be finite, got {0}")]
    NonFiniteValue(f64),
    #[error("input list must be non-empty")]
    EmptyInput,
    #[error("contingency table rows must each contain at least one observation")]
    EmptyTableRow,
    #[error("exact enumeration of {combined} pooled values is not feasible (limit {limit})")]
    ExactTooLarge { combined: usize, limit: usize },
}

/// A non-empty list of finite interval-scale observations (seconds, here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self, StatError> {
        if values.is_empty() {
            return Err(StatError::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(StatError::NonFiniteValue(bad));
        }
        Ok(Sample(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = StatError;
    fn try_from(values: Vec<f64>) -> Result<Self, StatError> {
        Sample::new(values)
    }
}

impl From<Sample> for Vec<f64> {
    fn from(s: Sample) -> Vec<f64> {
        s.0
    }
}

/// 2x2 found/not-found table: row 1 = fuzzer X, row 2 = fuzzer Y,
/// column 1 = found, column 2 = not found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Result<Self, StatError> {
        if a + b == 0 || c + d == 0 {
            return Err(StatError::EmptyTableRow);
        }
        Ok(ContingencyTable2x2 { a, b, c, d })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    NormalApprox,
}

/// A two-sided p-value together with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub value: f64,
    pub method: PMethod,
}

/// How the Mann-Whitney p-value is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MwuMode {
    Exact,
    Approx,
    /// Exact iff the combined sample size is at most `exact_size_limit`.
    #[default]
    Auto,
}

impl std::str::FromStr for MwuMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(MwuMode::Exact),
            "approx" => Ok(MwuMode::Approx),
            "auto" => Ok(MwuMode::Auto),
            other => Err(format!("unknown MWU mode `{other}` (expected exact|approx|auto)")),
        }
    }
}

/// Fractional ranks 1..n; tied values receive the mean rank of their block,
/// so the rank sum is always n(n+1)/2.
pub fn fractional_ranks(values: &[f64]) -> Result<Vec<f64>, StatError> {
    Ok(fractional_ranks_doubled(values)?
        .into_iter()
        .map(|r2| r2 as f64 / 2.0)
        .collect())
}

/// Ranks scaled by 2 so ties stay in exact integer arithmetic.
fn fractional_ranks_doubled(values: &[f64]) -> Result<Vec<u64>, StatError> {
    if values.is_empty() {
        return Err(StatError::EmptyInput);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(StatError::NonFiniteValue(bad));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));

    let mut ranks2 = vec![0u64; values.len()];
    let mut block_start = 0;
    while block_start < order.len() {
        let mut block_end = block_start + 1;
        while block_end < order.len() && values[order[block_end]] == values[order[block_start]] {
            block_end += 1;
        }
        // Positions block_start+1 ..= block_end hold equal values; their mean
        // rank doubled is (first + last) since ranks are consecutive integers.
        let mean2 = (block_start as u64 + 1) + (block_end as u64);
        for &idx in &order[block_start..block_end] {
            ranks2[idx] = mean2;
        }
        block_start = block_end;
    }
    Ok(ranks2)
}

/// Pair statistic for A12 and the exact MWU: W = 2*|{x_i > y_j}| + |{x_i = y_j}|.
fn pair_wins_doubled(x: &[f64], y: &[f64]) -> u64 {
    let mut sorted_y: Vec<f64> = y.to_vec();
    sorted_y.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut w2 = 0u64;
    for &xi in x {
        let less = sorted_y.partition_point(|&v| v < xi) as u64;
        let less_eq = sorted_y.partition_point(|&v| v <= xi) as u64;
        w2 += 2 * less + (less_eq - less);
    }
    w2
}

/// Vargha-Delaney A12: probability that a value drawn from `x` exceeds one
/// drawn from `y`, ties counted half. 0.5 means no effect.
///
/// Computed from the integer pair statistic, with the division oriented so
/// that `a12(x, y) + a12(y, x) == 1.0` holds exactly in floating point.
pub fn a12(x: &Sample, y: &Sample) -> f64 {
    let w2 = pair_wins_doubled(x.values(), y.values());
    let d = 2 * (x.len() as u64) * (y.len() as u64);
    if 2 * w2 <= d {
        w2 as f64 / d as f64
    } else {
        1.0 - (d - w2) as f64 / d as f64
    }
}

/// Two-sided Mann-Whitney-U p-value.
///
/// Exact mode enumerates all C(m+n, m) assignments of the pooled multiset to
/// group X and counts those whose U lies at least as far from mn/2 as the
/// observed U, which is correct in the presence of ties. Approximate mode
/// uses the normal approximation with continuity correction 0.5 and the
/// tie-corrected variance. Auto picks exact iff m+n <= `exact_size_limit`.
///
/// Two samples with identical pooled values are indistinguishable and yield
/// p = 1.0 (the zero-variance case is not an error).
pub fn mwu_p(
    x: &Sample,
    y: &Sample,
    mode: MwuMode,
    exact_size_limit: usize,
) -> Result<PValue, StatError> {
    let combined = x.len() + y.len();
    let exact = match mode {
        MwuMode::Exact => true,
        MwuMode::Approx => false,
        MwuMode::Auto => combined <= exact_size_limit,
    };
    if exact {
        mwu_exact(x.values(), y.values())
    } else {
        Ok(mwu_normal_approx(x.values(), y.values()))
    }
}

fn mwu_exact(x: &[f64], y: &[f64]) -> Result<PValue, StatError> {
    let m = x.len();
    let n = y.len();
    let total_len = m + n;
    if total_len > EXACT_ENUMERATION_HARD_LIMIT {
        return Err(StatError::ExactTooLarge {
            combined: total_len,
            limit: EXACT_ENUMERATION_HARD_LIMIT,
        });
    }
    let mut pooled: Vec<f64> = Vec::with_capacity(total_len);
    pooled.extend_from_slice(x);
    pooled.extend_from_slice(y);
    let ranks2 = fractional_ranks_doubled(&pooled)?;

    // All statistics doubled to stay in integers: sum(ranks2) over group X is
    // 2*R1, 2*U1 = 2*R1 - m(m+1), and the two-sided distance from the
    // midpoint is |2*U1 - mn|.
    let mm1 = (m as i64) * (m as i64 + 1);
    let mn = (m as i64) * (n as i64);
    let observed: i64 = ranks2[..m].iter().map(|&r| r as i64).sum::<i64>();
    let observed_distance = (observed - mm1 - mn).abs();

    let mut extreme = 0u64;
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        let r2_sum: i64 = combo.iter().map(|&i| ranks2[i] as i64).sum();
        if (r2_sum - mm1 - mn).abs() >= observed_distance {
            extreme += 1;
        }
        // Advance to the next lexicographic m-combination of 0..total_len.
        let mut i = m;
        loop {
            if i == 0 {
                let total = binomial_u64(total_len as u64, m as u64);
                let p = extreme as f64 / total as f64;
                return Ok(PValue {
                    value: p.clamp(f64::MIN_POSITIVE, 1.0),
                    method: PMethod::Exact,
                });
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

fn mwu_normal_approx(x: &[f64], y: &[f64]) -> PValue {
    let m = x.len();
    let n = y.len();
    let total_len = m + n;
    let mut pooled: Vec<f64> = Vec::with_capacity(total_len);
    pooled.extend_from_slice(x);
    pooled.extend_from_slice(y);
    let ranks2 = fractional_ranks_doubled(&pooled).expect("samples are non-empty and finite");

    let r1: f64 = ranks2[..m].iter().map(|&r| r as f64 / 2.0).sum();
    let mf = m as f64;
    let nf = n as f64;
    let u = mf * nf + mf * (mf + 1.0) / 2.0 - r1;

    // Tie-corrected variance over the pooled tie-group sizes t.
    let mut sorted = pooled;
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let nt = total_len as f64;
    let variance = (mf * nf / 12.0) * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    if variance <= 0.0 {
        // Every pooled value identical: the samples cannot be told apart.
        return PValue {
            value: 1.0,
            method: PMethod::NormalApprox,
        };
    }

    let diff = (u - mf * nf / 2.0).abs();
    let z = (diff - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::standard();
    let p = 2.0 * normal.cdf(-z);
    PValue {
        value: p.clamp(f64::MIN_POSITIVE, 1.0),
        method: PMethod::NormalApprox,
    }
}

/// Two-sided Fisher exact p-value: the sum of hypergeometric probabilities of
/// all tables with the observed margins whose point probability does not
/// exceed the observed table's (the "sum of small p" convention).
pub fn fisher_exact_p(t: &ContingencyTable2x2) -> PValue {
    let r1 = t.a + t.b;
    let r2 = t.c + t.d;
    let c1 = t.a + t.c;
    let n = r1 + r2;

    let lf = ln_factorials(n as usize);
    let ln_choose = |n: u64, k: u64| -> f64 { lf[n as usize] - lf[k as usize] - lf[(n - k) as usize] };
    let ln_point = |k: u64| -> f64 { ln_choose(r1, k) + ln_choose(r2, c1 - k) - ln_choose(n, c1) };

    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let ln_observed = ln_point(t.a);
    let ln_tol = FISHER_TIE_REL_TOL.ln_1p();

    let mut p = 0.0;
    for k in lo..=hi {
        let ln_k = ln_point(k);
        if ln_k <= ln_observed + ln_tol {
            p += ln_k.exp();
        }
    }
    PValue {
        value: p.clamp(f64::MIN_POSITIVE, 1.0),
        method: PMethod::Exact,
    }
}

/// Odds ratio (a*d)/(b*c) of a found/not-found table. Tables with any zero
/// cell get the Haldane-Anscombe correction (0.5 added to every cell) first,
/// so the result is always finite and positive.
pub fn odds_ratio(t: &ContingencyTable2x2) -> f64 {
    if t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0 {
        let (a, b, c, d) = (
            t.a as f64 + 0.5,
            t.b as f64 + 0.5,
            t.c as f64 + 0.5,
            t.d as f64 + 0.5,
        );
        (a * d) / (b * c)
    } else {
        (t.a as f64 * t.d as f64) / (t.b as f64 * t.c as f64)
    }
}

/// Cumulative ln-factorial table: lf[k] = ln(k!).
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = Vec::with_capacity(n + 1);
    lf.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        lf.push(acc);
    }
    lf
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 1..=k {
        c = c * (n - k + i) / i;
    }
    c
}

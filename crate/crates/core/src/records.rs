//! Record counting on cumulated price paths and the permutation-averaged
//! record-difference statistic.
//!
//! Conventions: the path start `S_0 = 0` counts as the first upper and the
//! first lower record, and a record requires a strict inequality against the
//! running extremum; a tie never creates a record. Under these conventions
//! `r_plus + t_minus == n + 1` and `r_minus + t_plus == n + 1` exactly, where
//! the drawdown duration `t_minus` is the number of steps spent strictly
//! below the running maximum.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed::{derive_seed, StreamPurpose};
use crate::series::{PricePath, ReturnSeries};

/// Default permutation count for the averaged statistic.
pub const DEFAULT_PERMUTATIONS: u64 = 1000;

/// Largest series length accepted by [`exhaustive_r0`] by default.
pub const DEFAULT_EXHAUSTIVE_BOUND: usize = 8;

/// Record counts of one path, optionally extended with the
/// permutation-averaged statistic `r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSummary {
    /// Number of upper records, counting the start.
    pub r_plus: u64,
    /// Number of lower records, counting the start.
    pub r_minus: u64,
    /// Total drawdown duration, `n + 1 - r_plus`.
    pub t_minus: u64,
    /// Total drawup duration, `n + 1 - r_minus`.
    pub t_plus: u64,
    /// Number of returns in the series.
    pub n: u64,
    /// Permutation average of `R_plus - R_minus`; `None` when only the
    /// observed ordering was counted.
    pub r0: Option<f64>,
    /// Number of sampled permutations behind `r0` (0 when `r0` is unset).
    pub num_permutations: u64,
    /// Master seed behind the permutation sampling (0 when `r0` is unset).
    pub master_seed: u64,
}

/// Count upper/lower records and drawdown/drawup durations of a path.
pub fn count_records(path: &PricePath) -> RecordSummary {
    let levels = path.levels();
    let n = (levels.len() - 1) as u64;
    let mut running_max = levels[0];
    let mut running_min = levels[0];
    let mut r_plus = 1u64;
    let mut r_minus = 1u64;
    for &s in &levels[1..] {
        if s > running_max {
            running_max = s;
            r_plus += 1;
        } else if s < running_min {
            running_min = s;
            r_minus += 1;
        }
    }
    RecordSummary {
        r_plus,
        r_minus,
        t_minus: n + 1 - r_plus,
        t_plus: n + 1 - r_minus,
        n,
        r0: None,
        num_permutations: 0,
        master_seed: 0,
    }
}

/// `R_plus - R_minus` of the path cumulated from `returns`.
///
/// The start contributes one record of each kind, so the difference reduces
/// to (upper jumps) - (lower jumps). Kept as an integer so batch sums stay
/// exact and order-independent.
#[inline]
pub(crate) fn record_diff(returns: &[f64]) -> i64 {
    let mut level = 0.0f64;
    let mut running_max = 0.0f64;
    let mut running_min = 0.0f64;
    let mut diff = 0i64;
    for &r in returns {
        level += r;
        if level > running_max {
            running_max = level;
            diff += 1;
        } else if level < running_min {
            running_min = level;
            diff -= 1;
        }
    }
    diff
}

#[inline]
fn one_permutation_diff(values: &[f64], buf: &mut [f64], seed: u64) -> i64 {
    buf.copy_from_slice(values);
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    buf.shuffle(&mut rng);
    record_diff(buf)
}

/// Sum of `R_plus - R_minus` over `num_permutations` uniform shuffles, with
/// the shuffle for index `j` seeded by `derive_seed(master_seed, Permutation, j)`.
/// Exact integer arithmetic makes the result independent of evaluation order.
pub(crate) fn signed_diff_sum_serial(
    values: &[f64],
    permutations: std::ops::Range<u64>,
    master_seed: u64,
) -> i64 {
    let mut buf = vec![0.0; values.len()];
    let mut sum = 0i64;
    for j in permutations {
        sum += one_permutation_diff(
            values,
            &mut buf,
            derive_seed(master_seed, StreamPurpose::Permutation, j),
        );
    }
    sum
}

fn signed_diff_sum(values: &[f64], num_permutations: u64, master_seed: u64) -> i64 {
    // Fan out only when the job is large enough to amortize task overhead;
    // the chunked sums are integers, so the two paths agree exactly.
    const PARALLEL_WORK_THRESHOLD: u64 = 1 << 23;
    let work = num_permutations.saturating_mul(values.len() as u64);
    if work < PARALLEL_WORK_THRESHOLD {
        signed_diff_sum_serial(values, 0..num_permutations, master_seed)
    } else {
        let chunk = 1 + num_permutations / (8 * rayon::current_num_threads().max(1) as u64);
        let starts: Vec<u64> = (0..num_permutations).step_by(chunk as usize).collect();
        starts
            .par_iter()
            .map(|&start| {
                let end = (start + chunk).min(num_permutations);
                signed_diff_sum_serial(values, start..end, master_seed)
            })
            .sum()
    }
}

/// Permutation-averaged record difference of a return series.
///
/// Counts records on the observed ordering, then averages
/// `R_plus - R_minus` over `num_permutations` uniform reshuffles of the
/// returns, each re-cumulated from zero. Deterministic given
/// `(series, num_permutations, master_seed)`.
pub fn r0_statistic(
    series: &ReturnSeries,
    num_permutations: u64,
    master_seed: u64,
) -> Result<RecordSummary> {
    if series.len() < 2 {
        return Err(Error::invalid("r0 statistic requires at least 2 returns"));
    }
    if num_permutations == 0 {
        return Err(Error::invalid(
            "r0 statistic requires at least one permutation",
        ));
    }
    let mut summary = count_records(&PricePath::from_returns(series));
    let sum = signed_diff_sum(series.values(), num_permutations, master_seed);
    summary.r0 = Some(sum as f64 / num_permutations as f64);
    summary.num_permutations = num_permutations;
    summary.master_seed = master_seed;
    Ok(summary)
}

/// Exact average of `R_plus - R_minus` over all `n!` orderings.
///
/// Test oracle for [`r0_statistic`]; refuses series longer than `bound`
/// because of the factorial blow-up.
pub fn exhaustive_r0_with_bound(series: &ReturnSeries, bound: usize) -> Result<f64> {
    let n = series.len();
    if n > bound {
        return Err(Error::invalid(format!(
            "exhaustive enumeration refused: length {n} exceeds bound {bound}"
        )));
    }
    let mut values = series.values().to_vec();
    let mut orderings: u64 = 0;
    let mut sum: i64 = 0;
    // Heap's algorithm; integer accumulation keeps the average exact up to
    // the final division.
    let mut counters = vec![0usize; n];
    sum += record_diff(&values);
    orderings += 1;
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                values.swap(0, i);
            } else {
                values.swap(counters[i], i);
            }
            sum += record_diff(&values);
            orderings += 1;
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(sum as f64 / orderings as f64)
}

/// [`exhaustive_r0_with_bound`] with the default bound of 8.
pub fn exhaustive_r0(series: &ReturnSeries) -> Result<f64> {
    exhaustive_r0_with_bound(series, DEFAULT_EXHAUSTIVE_BOUND)
}

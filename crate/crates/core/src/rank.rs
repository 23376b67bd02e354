//! Rank correlation measures used to compare estimator-implied asset
//! rankings: Spearman's rho, Kendall's tau-b, and a symmetrized Blest-type
//! coefficient that weights the top of the ranking more heavily.

use crate::error::{Error, Result};

/// Ranks of `values` (1-based), averaging over ties.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = (n + 1.0) / 2.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - mx);
        sxx += (a - mx) * (a - mx);
        syy += (b - mx) * (b - mx);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid(
            "spearman is undefined when a ranking is constant",
        ));
    }
    // sqrt rounding can push perfect agreement a ulp past 1
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Kendall's tau-b with tie correction.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                ties_x += 1;
                ties_y += 1;
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if dx * dy > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::invalid(
            "kendall tau is undefined when a ranking is constant",
        ));
    }
    Ok(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

/// Symmetrized Blest-type rank correlation.
///
/// The one-sided statistic weights agreement at the best ranks by
/// `(n + 1 - p_i)^2`, normalized so identical rankings score +1, reversed
/// rankings -1, and independent rankings 0 in expectation; symmetrizing over
/// the two orderings of the arguments restores exchangeability.
pub fn blest_symmetric(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    // Descending ranks (1 = largest) so the quadratic weight sits on the
    // best-ranked assets.
    let rx: Vec<f64> = average_ranks(x).iter().map(|r| n + 1.0 - r).collect();
    let ry: Vec<f64> = average_ranks(y).iter().map(|r| n + 1.0 - r).collect();
    Ok(0.5 * (blest_one_sided(&rx, &ry) + blest_one_sided(&ry, &rx)))
}

fn blest_one_sided(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len() as f64;
    let sum: f64 = p
        .iter()
        .zip(q)
        .map(|(pi, qi)| (n + 1.0 - pi) * (n + 1.0 - pi) * qi)
        .sum();
    // Single division so the identical/reversed boundaries land on exactly
    // +1 / -1: the numerator is integer-valued for tie-free rankings.
    let norm = n * (n + 1.0) * (n + 1.0);
    (((2.0 * n + 1.0) * norm - 12.0 * sum) / (norm * (n - 1.0))).clamp(-1.0, 1.0)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid("rank correlation needs equal-length inputs"));
    }
    if x.len() < 2 {
        return Err(Error::invalid("rank correlation needs at least two points"));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("rank correlation inputs must be finite"));
    }
    Ok(())
}

//! Weighted isotonic regression (pool-adjacent-violators), used to project
//! Monte Carlo noise off surfaces that are monotone in expectation.

/// Non-decreasing least-squares fit of `values` with `weights`.
///
/// Pooled members of a block share one fitted value bit-for-bit, so callers
/// can recover blocks by comparing adjacent outputs for exact equality.
pub fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // (value, weight, count) blocks.
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(n);
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w.max(f64::MIN_POSITIVE), 1));
        while blocks.len() >= 2 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 <= last.0 {
                break;
            }
            let w = prev.1 + last.1;
            let v = (prev.0 * prev.1 + last.0 * last.1) / w;
            let count = prev.2 + last.2;
            blocks.truncate(blocks.len() - 2);
            blocks.push((v, w, count));
        }
    }
    let mut out = Vec::with_capacity(n);
    for (v, _, count) in blocks {
        for _ in 0..count {
            out.push(v);
        }
    }
    out
}

//! Closed-form and series-based reference quantities for record statistics
//! of random walks: the universal driftless record law, small-drift
//! expansions of the expected record count for Gaussian and Student-t (nu=3)
//! increments, the persistence/record generating-function pipeline, the
//! Student-t convolution density at the origin, and large-drift record
//! rates. These serve as oracles and validators for the Monte Carlo
//! machinery.

use num_traits::{One, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::powser::{rational_from_f64, series_exp, series_inv, series_mul, BigRational, Coeff};

/// Apery's constant, zeta(3). The large-drift Student record rate uses it at
/// machine precision; quick estimates often round it to 6/5.
pub const APERY: f64 = 1.202_056_903_159_594_2;

/// Longest series length handled in exact rational arithmetic before the
/// generating-function pipeline falls back to floating point.
pub const RATIONAL_SERIES_LIMIT: usize = 64;

/// Universal distribution of the record count of a driftless random walk
/// with symmetric continuous i.i.d. increments.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftlessRecordLaw {
    n: usize,
    pmf: Vec<f64>,
}

impl DriftlessRecordLaw {
    /// Probability of exactly `r` records among `S_0..S_n`, `r` in `1..=n+1`.
    pub fn pmf(&self, r: usize) -> f64 {
        if r >= 1 && r <= self.n + 1 {
            self.pmf[r - 1]
        } else {
            0.0
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Probabilities for `r = 1..=n+1`.
    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| (i as f64 + 1.0) * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let r = i as f64 + 1.0;
                (r - m) * (r - m) * p
            })
            .sum()
    }
}

/// The universal driftless record law for a walk of `n` steps.
///
/// `P(R = r) = C(2n - r + 1, n) * 2^(r - 1 - 2n)`, evaluated through a ratio
/// recursion off a log-space start so it stays stable for large `n`. The
/// form is validated against Monte Carlo and a generating-function oracle in
/// the test suites rather than taken on faith, since transcriptions of this
/// law frequently transpose the binomial arguments.
pub fn driftless_record_pmf(n: usize) -> Result<DriftlessRecordLaw> {
    if n == 0 {
        return Err(Error::invalid("record law needs at least one step"));
    }
    let nf = n as f64;
    // P(1) = C(2n, n) / 4^n
    let log_p1 = ln_gamma(2.0 * nf + 1.0) - 2.0 * ln_gamma(nf + 1.0) - nf * (4.0f64).ln();
    let mut pmf = Vec::with_capacity(n + 1);
    let mut p = log_p1.exp();
    pmf.push(p);
    for r in 1..=n {
        // P(r+1) / P(r) = 2 (n - r + 1) / (2n - r + 1)
        let rf = r as f64;
        p *= 2.0 * (nf - rf + 1.0) / (2.0 * nf - rf + 1.0);
        pmf.push(p);
    }
    Ok(DriftlessRecordLaw { n, pmf })
}

/// Asymptotic mean and variance of the driftless record count:
/// `2 sqrt(n / pi)` and `(2 - 4 / pi) n`.
pub fn driftless_moments(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("moments need at least one step"));
    }
    let nf = n as f64;
    Ok((
        2.0 * (nf / std::f64::consts::PI).sqrt(),
        (2.0 - 4.0 / std::f64::consts::PI) * nf,
    ))
}

/// Expected number of upper records for Gaussian increments in the small
/// relative drift regime (`c/sigma << 1`, `n >> 1`, `c n / sigma << 1`):
/// `2 sqrt(n/pi) + (c sqrt(2) / (sigma pi)) [n arctan(sqrt n) - sqrt n]`.
pub fn gaussian_expected_records(c: f64, sigma: f64, n: usize) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("record count needs at least one step"));
    }
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let base = 2.0 * (nf / std::f64::consts::PI).sqrt();
    let drift = c * std::f64::consts::SQRT_2 / (sigma * std::f64::consts::PI)
        * (nf * sqrt_n.atan() - sqrt_n);
    Ok(base + drift)
}

/// Small-drift expected record count for Student-t increments with 3 degrees
/// of freedom (tail exponent 4): the Gaussian expression plus
/// `(c/sigma) * 8/(sqrt(3) pi^{3/2}) * sqrt(n) (atanh sqrt(1 - 1/n) - sqrt(1 - 1/n))`.
///
/// A first-order expansion that is knowingly rough; use it for shape and
/// direction, not tight values. The extra term is positive for `c > 0`:
/// heavy tails raise the record count at small drift.
pub fn student3_expected_records(c: f64, sigma: f64, n: usize) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if n < 2 {
        return Err(Error::invalid("student small-drift form needs n >= 2"));
    }
    let nf = n as f64;
    let root = (1.0 - 1.0 / nf).sqrt();
    let tail_term = (c / sigma) * 8.0 / (3.0f64.sqrt() * std::f64::consts::PI.powf(1.5))
        * nf.sqrt()
        * (root.atanh() - root);
    Ok(gaussian_expected_records(c, sigma, n)? + tail_term)
}

/// Provenance of a persistence sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalSource {
    Analytic,
    FromSignProbabilities,
    Simulated,
}

/// Persistence probabilities `q_minus(n)`: the chance the cumulated walk has
/// never exceeded its starting point after `n` steps (`q_minus(0) = 1` is
/// implicit). Genuine sign-probability inputs always produce a
/// non-increasing sequence; [`SurvivalSeries::validate`] checks the
/// invariants explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSeries {
    pub q_minus: Vec<f64>,
    pub source: SurvivalSource,
}

impl SurvivalSeries {
    pub fn validate(&self) -> Result<()> {
        if self.q_minus.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::numeric("persistence values must lie in [0, 1]"));
        }
        let mut prev = 1.0;
        for (i, &q) in self.q_minus.iter().enumerate() {
            if q > prev + 1e-12 {
                return Err(Error::numeric(format!(
                    "persistence must be non-increasing; rises at n = {}",
                    i + 1
                )));
            }
            prev = q;
        }
        Ok(())
    }
}

/// Build the persistence sequence from sign probabilities
/// `p[k] = P(S_{k+1} < 0)` via the fluctuation-theory identity
/// `sum_{n>=0} q_minus(n) z^n = exp(sum_{n>=1} p_n z^n / n)`.
///
/// Runs in exact rational arithmetic up to [`RATIONAL_SERIES_LIMIT`] terms,
/// floating point beyond.
pub fn survival_from_sign_probabilities(p_neg: &[f64]) -> Result<SurvivalSeries> {
    if p_neg.is_empty() {
        return Err(Error::invalid("sign probabilities must be non-empty"));
    }
    if p_neg.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("sign probabilities must lie in [0, 1]"));
    }
    let n_max = p_neg.len();
    let q = if n_max <= RATIONAL_SERIES_LIMIT {
        let mut a = vec![BigRational::zero(); n_max + 1];
        for (k, &p) in p_neg.iter().enumerate() {
            a[k + 1] = rational_from_f64(p) / BigRational::from_usize_exact(k + 1);
        }
        series_exp(&a)[1..]
            .iter()
            .map(|c| c.to_f64().expect("persistence coefficients are bounded"))
            .collect()
    } else {
        let mut a = vec![0.0f64; n_max + 1];
        for (k, &p) in p_neg.iter().enumerate() {
            a[k + 1] = p / (k + 1) as f64;
        }
        series_exp(&a)[1..].to_vec()
    };
    Ok(SurvivalSeries {
        q_minus: q,
        source: SurvivalSource::FromSignProbabilities,
    })
}

/// Expected upper-record counts `m_plus(0..=n_max)` from a persistence
/// sequence, through the generating-function identity
/// `M(z) = [(1 - z)^2 Q(z)]^{-1}` with `Q` the persistence series.
pub fn expected_records_from_survival(q: &SurvivalSeries) -> Result<Vec<f64>> {
    let n_max = q.q_minus.len();
    if n_max <= RATIONAL_SERIES_LIMIT {
        let mut qs = Vec::with_capacity(n_max + 1);
        qs.push(BigRational::one());
        qs.extend(q.q_minus.iter().map(|&v| rational_from_f64(v)));
        let m = records_from_survival_series(&qs)?;
        Ok(m.iter()
            .map(|c| c.to_f64().expect("record counts are bounded"))
            .collect())
    } else {
        let mut qs = Vec::with_capacity(n_max + 1);
        qs.push(1.0f64);
        qs.extend_from_slice(&q.q_minus);
        records_from_survival_series(&qs)
    }
}

fn records_from_survival_series<T: Coeff>(qs: &[T]) -> Result<Vec<T>> {
    if qs[0].is_zero() {
        return Err(Error::numeric(
            "persistence series with zero constant term is not invertible",
        ));
    }
    let n = qs.len();
    // (1 - z)^2 = 1 - 2z + z^2
    let mut sq = vec![T::zero(); n];
    sq[0] = T::one();
    if n > 1 {
        sq[1] = -(T::one() + T::one());
    }
    if n > 2 {
        sq[2] = T::one();
    }
    series_inv(&series_mul(&sq, qs))
}

/// Density at the origin of the `n`-fold convolution of a Student-t law with
/// 3 degrees of freedom and variance `sigma^2`.
///
/// Equals `(1/(sigma pi n)) * (n!/n^n) * sum_{s=0}^n n^s / s!`; evaluated by
/// a descending ratio accumulation that never forms a factorial, so it is
/// exact-to-rounding for `n` up to 10^4 and beyond.
pub fn student3_convolution_density_at_zero(n: usize, sigma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("convolution density needs n >= 1"));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    // u_s = (n^s / s!) / (n^n / n!); u_n = 1, u_{s-1} = u_s * s / n.
    let nf = n as f64;
    let mut u = 1.0f64;
    let mut total = 1.0f64;
    for s in (1..=n).rev() {
        u *= s as f64 / nf;
        total += u;
        if u < 1e-40 {
            break;
        }
    }
    Ok(total / (sigma * std::f64::consts::PI * nf))
}

/// Two-term large-`n` expansion of the same density:
/// `1/(sigma sqrt(2 pi n)) + 2/(3 sigma pi n)`.
///
/// The second coefficient follows from `sum_{s<=n} n^s/s! = e^n/2 +
/// (2/3) n^n/n! + O(n^{-1/2} n^n/n!)` together with Stirling; printed
/// versions of this expansion sometimes carry `sqrt(3)` in place of the 3,
/// which the exact sum rules out beyond n of a few hundred.
pub fn student3_convolution_density_asymptotic(n: usize, sigma: f64) -> Result<f64> {
    if n == 0 || !(sigma > 0.0) {
        return Err(Error::invalid(
            "asymptotic density needs n >= 1 and sigma > 0",
        ));
    }
    let nf = n as f64;
    Ok(1.0 / (sigma * (2.0 * std::f64::consts::PI * nf).sqrt())
        + 2.0 / (3.0 * sigma * std::f64::consts::PI * nf))
}

/// Crossover length beyond which the power-law tail of convoluted Student-t
/// (nu = 3) increments dominates the Gaussian center: smallest `n >= 2`
/// solving `(c/sigma) sqrt(n) = sqrt(log n)`, or `None` when no solution
/// exists in `(1, 10^9]`.
///
/// Bisection on `log n` to a tolerance of 0.5 in `n`; the crossover is soft,
/// so the result is an order-of-magnitude indicator.
pub fn crossover_n0(c_over_sigma: f64) -> Result<Option<u64>> {
    if !(c_over_sigma > 0.0) || !c_over_sigma.is_finite() {
        return Err(Error::invalid("c/sigma must be positive and finite"));
    }
    const N_MAX: f64 = 1e9;
    let theta_sq = c_over_sigma * c_over_sigma;
    let g = |n: f64| theta_sq * n - n.ln();
    // g is convex with minimum at n* = 1 / theta^2; a root >= 2 exists only
    // if g dips below zero somewhere in [2, N_MAX].
    let n_star = (1.0 / theta_sq).clamp(2.0, N_MAX);
    if g(n_star) > 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = if g(2.0) >= 0.0 {
        (2.0f64, n_star) // descending branch: first crossing above 2
    } else if g(N_MAX) >= 0.0 {
        (n_star, N_MAX) // ascending branch: the upper crossover
    } else {
        return Ok(None);
    };
    // Orient so g(lo) >= 0 >= g(hi) or vice versa; bisect on log n.
    let mut llo = lo.ln();
    let mut lhi = hi.ln();
    while hi - lo > 0.5 {
        let lmid = 0.5 * (llo + lhi);
        let mid = lmid.exp();
        if (g(mid) >= 0.0) == (g(lo) >= 0.0) {
            lo = mid;
            llo = lmid;
        } else {
            hi = mid;
            lhi = lmid;
        }
    }
    Ok(Some((0.5 * (lo + hi)).round().max(2.0) as u64))
}

/// Asymptotic per-step record rate in the large relative drift regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRate {
    pub rate: f64,
    /// False when the requested ratio is too small for the asymptotic form
    /// (the formula went negative); the value is still returned.
    pub in_regime: bool,
}

/// Increment family for [`large_drift_record_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFamily {
    Gaussian,
    Student3,
}

impl RateFamily {
    pub fn label(&self) -> &'static str {
        match self {
            RateFamily::Gaussian => "gaussian",
            RateFamily::Student3 => "student3",
        }
    }
}

/// Asymptotic record rate for `c n / sigma >> 1`:
/// Student (nu = 3): `1 - (sigma/c)^3 * (2 / (3 pi)) * zeta(3)`;
/// Gaussian: `1 - (sigma/c) * exp(-c^2 / (2 sigma^2)) / sqrt(2 pi)`.
pub fn large_drift_record_rate(family: RateFamily, c_over_sigma: f64) -> Result<RecordRate> {
    if !(c_over_sigma > 0.0) || !c_over_sigma.is_finite() {
        return Err(Error::invalid("c/sigma must be positive and finite"));
    }
    let rate = match family {
        RateFamily::Student3 => {
            let inv = 1.0 / c_over_sigma;
            1.0 - inv * inv * inv * (2.0 / (3.0 * std::f64::consts::PI)) * APERY
        }
        RateFamily::Gaussian => {
            1.0 - (1.0 / c_over_sigma)
                * (1.0 / (2.0 * std::f64::consts::PI).sqrt())
                * (-0.5 * c_over_sigma * c_over_sigma).exp()
        }
    };
    Ok(RecordRate {
        rate,
        in_regime: rate >= 0.0,
    })
}

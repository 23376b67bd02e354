//! Truncated power-series arithmetic used by the generating-function
//! machinery. Generic over the coefficient field so short series run in
//! exact rational arithmetic and long ones fall back to floating point.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{FromPrimitive, One, Zero};

use crate::error::{Error, Result};

pub type BigRational = Ratio<BigInt>;

/// Coefficient field for series arithmetic.
pub trait Coeff:
    Clone
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_usize_exact(n: usize) -> Self;
}

impl Coeff for f64 {
    fn from_usize_exact(n: usize) -> Self {
        n as f64
    }
}

impl Coeff for BigRational {
    fn from_usize_exact(n: usize) -> Self {
        BigRational::from_u64(n as u64).expect("usize fits")
    }
}

/// Exact dyadic rational of an f64. Panics on non-finite input, which the
/// callers exclude at their own boundaries.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite f64 converts exactly")
}

/// Coefficients of `exp(A)` where `A = sum a[k] z^k`, truncated at the length
/// of `a`; requires `a[0] == 0`.
pub fn series_exp<T: Coeff>(a: &[T]) -> Vec<T> {
    assert!(!a.is_empty() && a[0].is_zero(), "exp needs a[0] == 0");
    let n = a.len();
    let mut b = vec![T::zero(); n];
    b[0] = T::one();
    for m in 1..n {
        let mut acc = T::zero();
        for k in 1..=m {
            // b' = a' b  =>  m b_m = sum_k k a_k b_{m-k}
            acc = acc + T::from_usize_exact(k) * a[k].clone() * b[m - k].clone();
        }
        b[m] = acc / T::from_usize_exact(m);
    }
    b
}

/// Truncated product of two series, to the length of the shorter input.
pub fn series_mul<T: Coeff>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().min(b.len());
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        let mut acc = T::zero();
        for k in 0..=i {
            acc = acc + a[k].clone() * b[i - k].clone();
        }
        out[i] = acc;
    }
    out
}

/// Coefficients of `1 / C` truncated at the length of `c`; `c[0]` must be
/// nonzero or the series is not invertible.
pub fn series_inv<T: Coeff>(c: &[T]) -> Result<Vec<T>> {
    if c.is_empty() || c[0].is_zero() {
        return Err(Error::numeric(
            "series with zero constant term is not invertible",
        ));
    }
    let n = c.len();
    let mut d = vec![T::zero(); n];
    d[0] = T::one() / c[0].clone();
    for m in 1..n {
        let mut acc = T::zero();
        for k in 1..=m {
            acc = acc + c[k].clone() * d[m - k].clone();
        }
        d[m] = -(acc / c[0].clone());
    }
    Ok(d)
}

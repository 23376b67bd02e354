//! Small statistical helpers: moments, ordinary least squares with a slope
//! test, and a through-origin slope.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased (n-1) sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

/// Simple linear regression `y = intercept + slope * x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub stderr_slope: f64,
    /// Two-sided p-value of the slope under the standard t-test.
    pub p_value_slope: f64,
    /// Average squared residual, RSS / k.
    pub mean_sq_residual: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let k = x.len();
    if k != y.len() || k < 3 {
        return Err(Error::invalid(
            "ols needs matching x/y with at least 3 points",
        ));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid("ols design is degenerate: x has no spread"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let dof = (k - 2) as f64;
    let stderr_slope = (rss / dof / sxx).sqrt();
    let p_value_slope = if stderr_slope == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = (slope / stderr_slope).abs();
        let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::numeric(e.to_string()))?;
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok(LinearFit {
        intercept,
        slope,
        stderr_slope,
        p_value_slope,
        mean_sq_residual: rss / k as f64,
    })
}

/// Least-squares slope of `y = slope * x` through the origin.
pub fn through_origin_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::invalid(
            "through-origin slope needs matching non-empty x/y",
        ));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid(
            "through-origin slope is degenerate: x has no energy",
        ));
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx)
}

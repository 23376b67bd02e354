//! End-user Sharpe estimators: the moment-free record-based estimator (table
//! inversion or the simplified single-curve form), the vanilla
//! mean-over-standard-deviation ratio, a Student-t tail-index maximum
//! likelihood fit, and the delta-method efficiency comparison.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::calibration::{CalibrationTable, NuQuery};
use crate::error::{Error, Result};
use crate::records::{r0_statistic, signed_diff_sum_serial};
use crate::seed::{derive_seed, StreamPurpose};
use crate::series::ReturnSeries;
use crate::stats::{mean, sample_variance};
use crate::synthetic::{fill_series, SliceFamily};

/// Lower bound of the tail-index search.
pub const NU_SEARCH_MIN: f64 = 2.05;
/// Upper bound of the tail-index search; hits are reported as Gaussian.
pub const NU_SEARCH_MAX: f64 = 100.0;
/// Smallest window the estimators accept.
pub const MIN_ESTIMATION_LENGTH: usize = 20;

/// Which record-based evaluation path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Bilinear blend of the per-(n, nu) inverse maps.
    TableInverse,
    /// Single-curve form `a(R0/n) * (1 - (8/3) nu^{-3/2})`.
    Simplified,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::TableInverse => "table-inverse",
            Method::Simplified => "simplified",
        }
    }
}

/// Fitted tail index, with the upper clamp reported as Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuEstimate {
    Student(f64),
    Gaussian,
}

impl NuEstimate {
    pub fn label(&self) -> String {
        match self {
            NuEstimate::Gaussian => "gaussian".to_string(),
            NuEstimate::Student(v) => format!("{v}"),
        }
    }

    /// Heavy-tail correction factor `1 - (8/3) nu^{-3/2}` (1 for Gaussian).
    pub fn correction_factor(&self) -> f64 {
        match self {
            NuEstimate::Gaussian => 1.0,
            NuEstimate::Student(v) => 1.0 - (8.0 / 3.0) * v.powf(-1.5),
        }
    }
}

/// Non-fatal estimation events surfaced to the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Fitted tail index fell below the calibrated grid and was clamped.
    NuClampedLow { fitted: f64, bound: f64 },
    /// The record level saturated the calibrated range.
    R0AtBoundary,
    /// Window length was outside the table's lengths.
    OutsideTableLengths { n: u64 },
    /// Table inversion was unavailable, so the simplified curve was used.
    FellBackToSimplified,
    /// The window had zero variance; the tail fit was skipped.
    DegenerateVariance,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::NuClampedLow { fitted, bound } => {
                write!(f, "nu-clamped-low({fitted:.3}->{bound})")
            }
            Diagnostic::R0AtBoundary => write!(f, "r0-at-boundary"),
            Diagnostic::OutsideTableLengths { n } => write!(f, "outside-table-lengths({n})"),
            Diagnostic::FellBackToSimplified => write!(f, "fell-back-to-simplified"),
            Diagnostic::DegenerateVariance => write!(f, "degenerate-variance"),
        }
    }
}

/// Options of one record-based estimation.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub method: Method,
    pub permutations: u64,
    pub seed: u64,
    /// Multiply by sqrt(periods) when set (252 for daily data by the usual
    /// convention).
    pub periods_per_year: Option<f64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            method: Method::TableInverse,
            permutations: crate::records::DEFAULT_PERMUTATIONS,
            seed: 0,
            periods_per_year: None,
        }
    }
}

/// A moment-free Sharpe estimate with its inputs and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpeEstimate {
    pub theta: f64,
    pub theta_annualized: Option<f64>,
    pub nu: NuEstimate,
    pub r0: f64,
    pub n: u64,
    pub method: Method,
    pub permutations: u64,
    pub seed: u64,
    pub diagnostics: Vec<Diagnostic>,
}

/// True when the sample spread is zero up to float dust, in which case
/// scale-based estimators are undefined.
pub fn effectively_constant(values: &[f64]) -> bool {
    sample_variance(values).sqrt() <= 1e-10 * (1.0 + mean(values).abs())
}

/// Sample mean over sample standard deviation (n-1 denominator). No
/// small-sample bias correction is applied.
pub fn vanilla_sharpe(series: &ReturnSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::invalid("vanilla sharpe needs at least 2 returns"));
    }
    let values = series.values();
    if effectively_constant(values) {
        return Err(Error::invalid("vanilla sharpe undefined: zero variance"));
    }
    Ok(mean(values) / sample_variance(values).sqrt())
}

/// Location-scale Student-t maximum likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentFit {
    pub nu: NuEstimate,
    pub location: f64,
    pub scale: f64,
    pub log_likelihood: f64,
}

struct ProfilePoint {
    location: f64,
    scale: f64,
    log_likelihood: f64,
}

/// EM iteration for the location-scale t likelihood at fixed `nu`.
fn profile_at_nu(values: &[f64], nu: f64, warm: Option<(f64, f64)>) -> Result<ProfilePoint> {
    let n = values.len() as f64;
    let (mut location, mut scale) = warm.unwrap_or_else(|| {
        let m = mean(values);
        let sd = sample_variance(values).sqrt();
        let s = if nu > 2.5 {
            sd * ((nu - 2.0) / nu).sqrt()
        } else {
            sd * 0.5
        };
        (m, s.max(1e-12))
    });

    // Clustered data (most mass inside a band far narrower than the spread)
    // makes EM converge slowly toward a legitimately small scale, so the cap
    // is generous.
    const MAX_ITER: usize = 4000;
    const TOL: f64 = 1e-10;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut wsum = 0.0;
        let mut wx = 0.0;
        for &x in values {
            let d = (x - location) / scale;
            let w = (nu + 1.0) / (nu + d * d);
            wsum += w;
            wx += w * x;
        }
        let new_location = wx / wsum;
        let mut wss = 0.0;
        for &x in values {
            let d = (x - location) / scale;
            let w = (nu + 1.0) / (nu + d * d);
            let r = x - new_location;
            wss += w * r * r;
        }
        let new_scale = (wss / n).sqrt().max(1e-300);
        let done = (new_location - location).abs() <= TOL * (1.0 + location.abs())
            && (new_scale - scale).abs() <= TOL * scale;
        location = new_location;
        scale = new_scale;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "t fit at nu={nu}: EM hit the iteration cap at location={location}, scale={scale}"
        )));
    }

    let norm = ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - scale.ln();
    let mut ll = 0.0;
    for &x in values {
        let d = (x - location) / scale;
        ll += norm - (nu + 1.0) / 2.0 * (1.0 + d * d / nu).ln();
    }
    Ok(ProfilePoint {
        location,
        scale,
        log_likelihood: ll,
    })
}

/// Fit a location-scale Student-t by maximum likelihood. The tail index is
/// profiled on a log grid over `[2.05, 100]` and refined by golden-section;
/// fits that run into the upper bound are reported as Gaussian.
pub fn fit_student_nu(series: &ReturnSeries) -> Result<StudentFit> {
    let values = series.values();
    if values.len() < MIN_ESTIMATION_LENGTH {
        return Err(Error::invalid(format!(
            "tail fit needs at least {MIN_ESTIMATION_LENGTH} returns"
        )));
    }
    if effectively_constant(values) {
        return Err(Error::invalid("tail fit undefined: zero variance"));
    }

    const GRID_POINTS: usize = 21;
    let log_min = NU_SEARCH_MIN.ln();
    let log_max = NU_SEARCH_MAX.ln();
    let step = (log_max - log_min) / (GRID_POINTS as f64 - 1.0);

    let mut grid = Vec::with_capacity(GRID_POINTS);
    let mut warm = None;
    for i in 0..GRID_POINTS {
        let nu = (log_min + step * i as f64).exp();
        let point = profile_at_nu(values, nu, warm)?;
        warm = Some((point.location, point.scale));
        grid.push((nu, point));
    }
    let best_idx = grid
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1 .1
                .log_likelihood
                .partial_cmp(&b.1 .1.log_likelihood)
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();

    // Golden-section refinement on log nu between the bracketing neighbours.
    let lo = if best_idx == 0 {
        log_min
    } else {
        (grid[best_idx - 1].0).ln()
    };
    let hi = if best_idx == GRID_POINTS - 1 {
        log_max
    } else {
        (grid[best_idx + 1].0).ln()
    };
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let warm = Some((grid[best_idx].1.location, grid[best_idx].1.scale));
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = profile_at_nu(values, x1.exp(), warm)?;
    let mut f2 = profile_at_nu(values, x2.exp(), warm)?;
    while b - a > 1e-3 {
        if f1.log_likelihood > f2.log_likelihood {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = profile_at_nu(values, x1.exp(), warm)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = profile_at_nu(values, x2.exp(), warm)?;
        }
    }
    let (log_nu, point) = if f1.log_likelihood > f2.log_likelihood {
        (x1, f1)
    } else {
        (x2, f2)
    };
    let nu = log_nu.exp();

    let nu_estimate = if nu >= 0.99 * NU_SEARCH_MAX {
        NuEstimate::Gaussian
    } else {
        NuEstimate::Student(nu)
    };
    Ok(StudentFit {
        nu: nu_estimate,
        location: point.location,
        scale: point.scale,
        log_likelihood: point.log_likelihood,
    })
}

/// Record-based Sharpe estimate of one series against a calibration table.
pub fn estimate_sharpe(
    series: &ReturnSeries,
    table: &CalibrationTable,
    options: &EstimateOptions,
) -> Result<SharpeEstimate> {
    let n = series.len();
    if n < MIN_ESTIMATION_LENGTH {
        return Err(Error::invalid(format!(
            "record estimation needs at least {MIN_ESTIMATION_LENGTH} returns"
        )));
    }
    let summary = r0_statistic(series, options.permutations, options.seed)?;
    let r0 = summary.r0.expect("set by r0_statistic");

    let mut diagnostics = Vec::new();
    let nu = if effectively_constant(series.values()) {
        diagnostics.push(Diagnostic::DegenerateVariance);
        NuEstimate::Gaussian
    } else {
        fit_student_nu(series)?.nu
    };

    let theta = match options.method {
        Method::TableInverse => {
            if n as u32 >= table.min_n() && n as u32 <= table.max_n() {
                let query = match nu {
                    NuEstimate::Gaussian => NuQuery::Gaussian,
                    NuEstimate::Student(v) => NuQuery::Student(v),
                };
                let eval = table.invert_r0(r0, n as u32, query)?;
                if eval.r0_clamped {
                    diagnostics.push(Diagnostic::R0AtBoundary);
                }
                if eval.nu_clamped {
                    if let NuEstimate::Student(v) = nu {
                        diagnostics.push(Diagnostic::NuClampedLow {
                            fitted: v,
                            bound: table.min_student_nu(),
                        });
                    }
                }
                eval.theta
            } else {
                diagnostics.push(Diagnostic::OutsideTableLengths { n: n as u64 });
                diagnostics.push(Diagnostic::FellBackToSimplified);
                simplified_theta(table, r0, n, nu, &mut diagnostics)
            }
        }
        Method::Simplified => simplified_theta(table, r0, n, nu, &mut diagnostics),
    };

    Ok(SharpeEstimate {
        theta,
        theta_annualized: options.periods_per_year.map(|p| theta * p.sqrt()),
        nu,
        r0,
        n: n as u64,
        method: options.method,
        permutations: options.permutations,
        seed: options.seed,
        diagnostics,
    })
}

fn simplified_theta(
    table: &CalibrationTable,
    r0: f64,
    n: usize,
    nu: NuEstimate,
    diagnostics: &mut Vec<Diagnostic>,
) -> f64 {
    let nu = match nu {
        NuEstimate::Student(v) if v < table.min_student_nu() => {
            diagnostics.push(Diagnostic::NuClampedLow {
                fitted: v,
                bound: table.min_student_nu(),
            });
            NuEstimate::Student(table.min_student_nu())
        }
        other => other,
    };
    let (a, clamped) = table.a_curve_value(r0 / n as f64);
    if clamped {
        diagnostics.push(Diagnostic::R0AtBoundary);
    }
    a * nu.correction_factor()
}

/// Relative efficiency of the record estimator against the vanilla one at a
/// single `(n, theta)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub n: u32,
    pub slice: SliceFamily,
    pub theta_true: f64,
    /// Sample variance of the vanilla estimates.
    pub sigma_s_sq: f64,
    /// Delta-method variance of the record estimates:
    /// `Var(R0) / (d E(R0)/d theta)^2`.
    pub sigma_r_sq: f64,
    /// `sigma_s_sq / sigma_r_sq`; above 1 the record estimator wins.
    pub rho: f64,
    /// False when the calibration slope was below the numeric floor.
    pub usable: bool,
}

/// Monte Carlo efficiency study: per `(n, theta)` pair, draw `n_avg` series,
/// compute the permutation statistic and the vanilla estimate on the same
/// draws, and compare variances with the delta method through the
/// calibration slope.
pub fn efficiency_study(
    family: SliceFamily,
    ns: &[u32],
    thetas: &[f64],
    n_avg: u64,
    permutations: u64,
    master_seed: u64,
    table: &CalibrationTable,
) -> Result<Vec<EfficiencyReport>> {
    if n_avg < 2 || permutations == 0 {
        return Err(Error::invalid(
            "efficiency study needs n_avg >= 2 and permutations >= 1",
        ));
    }
    let mut reports = Vec::new();
    let mut row_index = 0u64;
    for &n in ns {
        for &theta in thetas {
            let sub_master = derive_seed(master_seed, StreamPurpose::Study, row_index);
            row_index += 1;
            let spec = family.spec(theta);
            let samples: Vec<(f64, f64)> = (0..n_avg)
                .into_par_iter()
                .map(|replica| {
                    let mut buf = vec![0.0; n as usize];
                    let series_seed = derive_seed(sub_master, StreamPurpose::SeriesDraw, replica);
                    let perm_master =
                        derive_seed(sub_master, StreamPurpose::PermutationSet, replica);
                    fill_series(&spec, series_seed, &mut buf);
                    let r0 = signed_diff_sum_serial(&buf, 0..permutations, perm_master) as f64
                        / permutations as f64;
                    let sd = sample_variance(&buf).sqrt();
                    (r0, mean(&buf) / sd)
                })
                .collect();
            let r0s: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let vanillas: Vec<f64> = samples.iter().map(|s| s.1).collect();
            let var_r0 = sample_variance(&r0s);
            let sigma_s_sq = sample_variance(&vanillas);
            let slope = table.forward_derivative(n, family, theta)?;
            let usable = slope.abs() > 1e-9;
            let sigma_r_sq = if usable {
                var_r0 / (slope * slope)
            } else {
                f64::INFINITY
            };
            reports.push(EfficiencyReport {
                n,
                slice: family,
                theta_true: theta,
                sigma_s_sq,
                sigma_r_sq,
                rho: sigma_s_sq / sigma_r_sq,
                usable,
            });
        }
    }
    Ok(reports)
}

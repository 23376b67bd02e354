//! Deterministic synthetic return generation and the Monte Carlo surface
//! driver behind calibration and the efficiency studies.

use std::io::Write;

use rand::SeedableRng;
use rand_distr::{Distribution, Gamma, Normal};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::records::signed_diff_sum_serial;
use crate::seed::{derive_seed, StreamPurpose};
use crate::series::ReturnSeries;

/// Increment family of a synthetic return process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncrementFamily {
    Gaussian,
    /// Student-t with `nu` degrees of freedom, standardized so the variance
    /// equals `sigma^2` (requires `nu > 2`); the underlying t scale is
    /// `sigma * sqrt((nu - 2) / nu)`.
    Student {
        nu: f64,
    },
}

/// Distribution of one synthetic increment: family, standard deviation and
/// per-period drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementSpec {
    pub family: IncrementFamily,
    pub sigma: f64,
    pub c: f64,
}

impl IncrementSpec {
    pub fn gaussian(c: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !c.is_finite() {
            return Err(Error::invalid(
                "gaussian increments need finite c and sigma > 0",
            ));
        }
        Ok(IncrementSpec {
            family: IncrementFamily::Gaussian,
            sigma,
            c,
        })
    }

    pub fn student(nu: f64, c: f64, sigma: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::invalid(
                "student increments need nu > 2 so the variance exists",
            ));
        }
        if !(sigma > 0.0) || !sigma.is_finite() || !c.is_finite() {
            return Err(Error::invalid(
                "student increments need finite c and sigma > 0",
            ));
        }
        Ok(IncrementSpec {
            family: IncrementFamily::Student { nu },
            sigma,
            c,
        })
    }

    /// True per-period Sharpe ratio `c / sigma`.
    pub fn theta(&self) -> f64 {
        self.c / self.sigma
    }
}

/// Fill `out` with draws from `spec`, reproducibly from `seed`.
pub(crate) fn fill_series(spec: &IncrementSpec, seed: u64, out: &mut [f64]) {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    match spec.family {
        IncrementFamily::Gaussian => {
            let normal = Normal::new(spec.c, spec.sigma).expect("validated at construction");
            for v in out.iter_mut() {
                *v = normal.sample(&mut rng);
            }
        }
        IncrementFamily::Student { nu } => {
            // Ratio-of-normal-to-chi construction: z / sqrt(v / nu) with
            // v ~ chi^2(nu), then standardized to variance sigma^2.
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let chi2 = Gamma::new(nu / 2.0, 2.0).expect("validated at construction");
            let scale = spec.sigma;
            for vslot in out.iter_mut() {
                let z: f64 = normal.sample(&mut rng);
                let v: f64 = chi2.sample(&mut rng);
                *vslot = spec.c + z * scale * ((nu - 2.0) / v).sqrt();
            }
        }
    }
}

/// Generate `n` i.i.d. increments from `spec`; bit-identical for identical
/// `(spec, n, seed)`.
pub fn generate_series(spec: &IncrementSpec, n: usize, seed: u64) -> Result<ReturnSeries> {
    if n == 0 {
        return Err(Error::invalid("cannot generate an empty series"));
    }
    let mut values = vec![0.0; n];
    fill_series(spec, seed, &mut values);
    ReturnSeries::new(values)
}

/// One Monte Carlo slice of the surface: a Student tail index or the
/// Gaussian limit. Slices are ordered with Students ascending in `nu` and
/// the Gaussian limit last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceFamily {
    Student(f64),
    Gaussian,
}

impl SliceFamily {
    pub(crate) fn spec(&self, theta: f64) -> IncrementSpec {
        // sigma = 1 without loss of generality: record statistics are scale
        // invariant, so only theta = c / sigma matters.
        match self {
            SliceFamily::Gaussian => IncrementSpec::gaussian(theta, 1.0).expect("valid"),
            SliceFamily::Student(nu) => IncrementSpec::student(*nu, theta, 1.0).expect("valid"),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SliceFamily::Gaussian => "gaussian".to_string(),
            SliceFamily::Student(nu) => format!("{nu}"),
        }
    }
}

/// Grid over which the expected permutation-averaged record difference is
/// measured.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    /// Series lengths, strictly increasing.
    pub ns: Vec<u32>,
    /// True Sharpe ratios, strictly increasing and non-negative (a zero row
    /// is allowed for symmetry validation; calibration requires positives).
    pub thetas: Vec<f64>,
    /// Student tail indices, strictly increasing, all > 2.
    pub nus: Vec<f64>,
    /// Whether a Gaussian slice is appended after the Student slices.
    pub include_gaussian: bool,
}

impl SurfaceGrid {
    /// Scaled-down default grid: nu in {2.5, 3, 4, 5, 7, 10} plus the
    /// Gaussian limit, n in {20, 50, 100, 252, 504}, 15 geometric theta
    /// values in [0.001, 1].
    pub fn desk_scale() -> Self {
        SurfaceGrid {
            ns: vec![20, 50, 100, 252, 504],
            thetas: geometric_grid(1e-3, 1.0, 15),
            nus: vec![2.5, 3.0, 4.0, 5.0, 7.0, 10.0],
            include_gaussian: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.thetas.is_empty() {
            return Err(Error::invalid("surface grid must have lengths and thetas"));
        }
        if self.nus.is_empty() && !self.include_gaussian {
            return Err(Error::invalid(
                "surface grid must include at least one slice",
            ));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) || self.ns[0] < 2 {
            return Err(Error::invalid(
                "lengths must be strictly increasing and >= 2",
            ));
        }
        if self.thetas.iter().any(|t| !t.is_finite() || *t < 0.0)
            || self.thetas.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "thetas must be non-negative and strictly increasing",
            ));
        }
        if self.nus.iter().any(|v| !(*v > 2.0)) || self.nus.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("nus must be strictly increasing and > 2"));
        }
        Ok(())
    }

    /// Slices in canonical order: Students ascending, Gaussian last.
    pub fn slices(&self) -> Vec<SliceFamily> {
        let mut slices: Vec<SliceFamily> = self
            .nus
            .iter()
            .map(|&nu| SliceFamily::Student(nu))
            .collect();
        if self.include_gaussian {
            slices.push(SliceFamily::Gaussian);
        }
        slices
    }

    /// Estimated elementary work (scan steps) of a surface build.
    pub fn estimated_work(&self, n_avg: u64, permutations: u64) -> u128 {
        let steps: u128 = self.ns.iter().map(|&n| n as u128).sum();
        steps
            * self.thetas.len() as u128
            * self.slices().len() as u128
            * n_avg as u128
            * permutations as u128
    }
}

/// `count` points geometrically spaced over `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let ratio = (hi / lo).powf(1.0 / (count as f64 - 1.0));
    let mut out = Vec::with_capacity(count);
    let mut v = lo;
    for i in 0..count {
        if i == count - 1 {
            v = hi;
        }
        out.push(v);
        v *= ratio;
    }
    out
}

/// One measured surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub n: u32,
    pub theta: f64,
    pub slice: SliceFamily,
    pub mean_r0: f64,
    pub stderr_r0: f64,
}

/// Measured `E(R0)` surface, row-ordered by (n, theta, slice).
#[derive(Debug, Clone, PartialEq)]
pub struct R0Surface {
    pub grid: SurfaceGrid,
    pub rows: Vec<SurfaceRow>,
    pub master_seed: u64,
    pub n_avg: u64,
    pub permutations: u64,
}

/// Guardrail options for surface construction.
#[derive(Debug, Clone)]
pub struct SurfaceOptions {
    /// Maximum elementary scan steps accepted without `force`.
    pub work_budget: u128,
    pub force: bool,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        // Slightly above the default desk-scale build (~1e12 scan steps).
        SurfaceOptions {
            work_budget: 2_000_000_000_000,
            force: false,
        }
    }
}

/// Measure `E(R0)` over the grid: for each `(n, theta, slice)` triple,
/// generate `n_avg` series, average the permutation statistic of each, and
/// report the mean with its standard error.
///
/// Per-replica sums are exact integers accumulated in replica order, so the
/// result is a pure function of `(grid, n_avg, permutations, master_seed)`
/// regardless of the parallel schedule.
pub fn mean_r0_surface(
    grid: &SurfaceGrid,
    n_avg: u64,
    permutations: u64,
    master_seed: u64,
    options: &SurfaceOptions,
) -> Result<R0Surface> {
    grid.validate()?;
    if n_avg < 2 || permutations == 0 {
        return Err(Error::invalid(
            "surface needs n_avg >= 2 and permutations >= 1",
        ));
    }
    let estimated = grid.estimated_work(n_avg, permutations);
    if estimated > options.work_budget && !options.force {
        return Err(Error::BudgetExceeded {
            estimated,
            budget: options.work_budget,
        });
    }

    let slices = grid.slices();
    let mut triples = Vec::new();
    for &n in &grid.ns {
        for &theta in &grid.thetas {
            for slice in &slices {
                triples.push((n, theta, *slice));
            }
        }
    }

    // Task granularity: blocks of replicas so two cores stay busy across
    // triples of very different cost.
    const BLOCK: u64 = 512;
    let mut tasks = Vec::new();
    for (triple_idx, triple) in triples.iter().enumerate() {
        let mut start = 0;
        while start < n_avg {
            let end = (start + BLOCK).min(n_avg);
            tasks.push((triple_idx, *triple, start..end));
            start = end;
        }
    }

    let partials: Vec<(usize, i128, i128)> = tasks
        .into_par_iter()
        .map(|(triple_idx, (n, theta, slice), range)| {
            let spec = slice.spec(theta);
            let mut buf = vec![0.0; n as usize];
            let mut sum: i128 = 0;
            let mut sum_sq: i128 = 0;
            for replica in range {
                let global = triple_idx as u64 * n_avg + replica;
                let series_seed = derive_seed(master_seed, StreamPurpose::SeriesDraw, global);
                let perm_master = derive_seed(master_seed, StreamPurpose::PermutationSet, global);
                fill_series(&spec, series_seed, &mut buf);
                let s = signed_diff_sum_serial(&buf, 0..permutations, perm_master) as i128;
                sum += s;
                sum_sq += s * s;
            }
            (triple_idx, sum, sum_sq)
        })
        .collect();

    let mut sums = vec![(0i128, 0i128); triples.len()];
    for (idx, s, s2) in partials {
        sums[idx].0 += s;
        sums[idx].1 += s2;
    }

    let p = permutations as f64;
    let m = n_avg as f64;
    let rows = triples
        .iter()
        .zip(&sums)
        .map(|(&(n, theta, slice), &(sum, sum_sq))| {
            let mean = sum as f64 / (p * m);
            // Per-series r0_i = s_i / p; unbiased sample variance over replicas.
            let mean_sq = sum_sq as f64 / (p * p * m);
            let var = ((mean_sq - mean * mean) * m / (m - 1.0)).max(0.0);
            SurfaceRow {
                n,
                theta,
                slice,
                mean_r0: mean,
                stderr_r0: (var / m).sqrt(),
            }
        })
        .collect();

    Ok(R0Surface {
        grid: grid.clone(),
        rows,
        master_seed,
        n_avg,
        permutations,
    })
}

impl R0Surface {
    /// Rows of one `(n, slice)` slice, ascending in theta.
    pub fn slice_rows(&self, n: u32, slice: SliceFamily) -> Vec<&SurfaceRow> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.slice == slice)
            .collect()
    }

    /// Emit the raw surface as CSV with the documented columns, preceded by
    /// provenance comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# record-sharpe r0-surface")?;
        writeln!(w, "# master_seed={}", self.master_seed)?;
        writeln!(w, "n,theta,nu,n_avg,permutations,mean_r0,stderr_r0")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.n,
                fmt_f64(row.theta),
                row.slice.label(),
                self.n_avg,
                self.permutations,
                fmt_f64(row.mean_r0),
                fmt_f64(row.stderr_r0),
            )?;
        }
        Ok(())
    }

    /// Parse a surface previously emitted by [`R0Surface::write_csv`],
    /// reconstructing the grid from the row set.
    pub fn read_csv<R: std::io::BufRead>(reader: R) -> Result<R0Surface> {
        let mut master_seed = 0u64;
        let mut rows: Vec<SurfaceRow> = Vec::new();
        let mut n_avg = 0u64;
        let mut permutations = 0u64;
        let mut saw_header = false;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("master_seed=") {
                    master_seed = v.parse().map_err(|_| {
                        Error::invalid(format!("bad master_seed at line {}", lineno + 1))
                    })?;
                }
                continue;
            }
            if !saw_header {
                if line != "n,theta,nu,n_avg,permutations,mean_r0,stderr_r0" {
                    return Err(Error::invalid(format!(
                        "unexpected surface header at line {}",
                        lineno + 1
                    )));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::invalid(format!(
                    "bad surface row at line {}",
                    lineno + 1
                )));
            }
            let parse_f = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number {s:?} at line {}", lineno + 1)))
            };
            let slice = if fields[2] == "gaussian" {
                SliceFamily::Gaussian
            } else {
                SliceFamily::Student(parse_f(fields[2])?)
            };
            n_avg = fields[3]
                .parse()
                .map_err(|_| Error::invalid(format!("bad n_avg at line {}", lineno + 1)))?;
            permutations = fields[4]
                .parse()
                .map_err(|_| Error::invalid(format!("bad permutations at line {}", lineno + 1)))?;
            rows.push(SurfaceRow {
                n: fields[0]
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad n at line {}", lineno + 1)))?,
                theta: parse_f(fields[1])?,
                slice,
                mean_r0: parse_f(fields[5])?,
                stderr_r0: parse_f(fields[6])?,
            });
        }
        if rows.is_empty() {
            return Err(Error::invalid("surface csv contained no rows"));
        }
        let mut ns: Vec<u32> = rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let mut thetas: Vec<f64> = rows.iter().map(|r| r.theta).collect();
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thetas.dedup();
        let mut nus: Vec<f64> = rows
            .iter()
            .filter_map(|r| match r.slice {
                SliceFamily::Student(nu) => Some(nu),
                SliceFamily::Gaussian => None,
            })
            .collect();
        nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nus.dedup();
        let include_gaussian = rows.iter().any(|r| r.slice == SliceFamily::Gaussian);
        Ok(R0Surface {
            grid: SurfaceGrid {
                ns,
                thetas,
                nus,
                include_gaussian,
            },
            rows,
            master_seed,
            n_avg,
            permutations,
        })
    }
}

/// Canonical cache key of a surface build: a short digest over the grid and
/// sampling parameters, stable across runs.
pub fn surface_cache_key(
    grid: &SurfaceGrid,
    n_avg: u64,
    permutations: u64,
    master_seed: u64,
) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for n in &grid.ns {
        hasher.update(n.to_le_bytes());
    }
    for t in &grid.thetas {
        hasher.update(t.to_le_bytes());
    }
    for v in &grid.nus {
        hasher.update(v.to_le_bytes());
    }
    hasher.update([grid.include_gaussian as u8]);
    hasher.update(n_avg.to_le_bytes());
    hasher.update(permutations.to_le_bytes());
    hasher.update(master_seed.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = String::new();
    for b in &digest[..8] {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Decimal formatting with 17 significant digits; round-trips f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

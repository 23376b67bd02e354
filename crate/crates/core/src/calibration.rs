//! Calibration tables: measured `E(R0)` surfaces turned into invertible
//! estimator maps, the Student tail-index dependence fits, the coarse-grained
//! single-curve estimator, and versioned text persistence with an integrity
//! checksum.

use std::fs;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::isotonic::pava;
use crate::stats::{ols, through_origin_slope};
use crate::synthetic::{
    fmt_f64, mean_r0_surface, R0Surface, SliceFamily, SurfaceGrid, SurfaceOptions, SurfaceRow,
};

pub const TABLE_MAGIC: &str = "record-sharpe calibration table";
pub const TABLE_FORMAT_VERSION: u32 = 1;

/// Fits with a slope p-value above this are rejected.
pub const FIT_P_VALUE_MAX: f64 = 0.01;
/// Fits with an average squared residual above this are rejected.
pub const FIT_MEAN_SQ_RESIDUAL_MAX: f64 = 0.1;

/// Tail-index query for table lookups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuQuery {
    Gaussian,
    Student(f64),
}

/// One tail-dependence fit `theta(nu) = a - b nu^{-3/2}` at fixed `(r0, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub r0: f64,
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub p_value_b: f64,
    pub mean_sq_residual: f64,
    pub accepted: bool,
}

/// Coverage demanded of the accepted fits before the simplified curve is
/// built. The defaults suit the full desk-scale grid; reduced test grids can
/// relax them.
#[derive(Debug, Clone)]
pub struct CurveRequirements {
    pub min_accepted: usize,
    /// At least one coarse group at or below this `R0/n`.
    pub min_low_r: f64,
    /// At least one coarse group at or above this `R0/n`.
    pub min_high_r: f64,
    /// Fits from shorter series are excluded from the coarse curve and the
    /// b-on-a regression: the `a(R0/n)` collapse only holds from roughly a
    /// hundred returns up.
    pub collapse_min_n: u32,
}

impl Default for CurveRequirements {
    fn default() -> Self {
        CurveRequirements {
            min_accepted: 50,
            min_low_r: 0.06,
            min_high_r: 0.5,
            collapse_min_n: 100,
        }
    }
}

/// Monotone maps of one `(n, slice)` surface slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMaps {
    pub n: u32,
    pub slice: SliceFamily,
    /// theta -> E(R0), anchored at (0, 0).
    forward: MonotoneCubic,
    /// E(R0) -> theta, anchored at (0, 0), from the pooled isotonic knots.
    inverse: MonotoneCubic,
}

impl SliceMaps {
    /// Invert `r0` on this slice, antisymmetric in the sign and clamped at
    /// the largest calibrated record level.
    pub fn inverse_theta(&self, r0: f64) -> (f64, bool) {
        let magnitude = r0.abs();
        let clamped = magnitude > self.inverse.max_x();
        let theta = self.inverse.eval(magnitude);
        (if r0 < 0.0 { -theta } else { theta }, clamped)
    }

    /// Analytic slope of the forward map at `theta`.
    pub fn forward_slope(&self, theta: f64) -> f64 {
        self.forward.derivative(theta)
    }

    pub fn forward_value(&self, theta: f64) -> f64 {
        self.forward.eval(theta)
    }

    /// Largest record level the inverse map covers.
    pub fn max_r0(&self) -> f64 {
        self.inverse.max_x()
    }

    /// Largest theta the slice was calibrated on.
    pub fn max_theta(&self) -> f64 {
        self.forward.max_x()
    }
}

/// Build the monotone forward/inverse maps of one slice from its measured
/// points. The mean values are isotonic-projected (inverse-variance weights)
/// before interpolation; pooled knots collapse into single inverse knots at
/// the weighted mean theta of the pool.
pub fn build_inverse_map(
    n: u32,
    slice: SliceFamily,
    thetas: &[f64],
    mean_r0: &[f64],
    stderr_r0: &[f64],
) -> Result<SliceMaps> {
    if thetas.len() < 4 {
        return Err(Error::table(format!(
            "slice (n={n}, {}) has {} theta points; at least 4 required",
            slice.label(),
            thetas.len()
        )));
    }
    if thetas.len() != mean_r0.len() || thetas.len() != stderr_r0.len() {
        return Err(Error::table("slice arrays must have matching lengths"));
    }
    if thetas[0] <= 0.0 {
        return Err(Error::table("slice thetas must be strictly positive"));
    }

    let weights: Vec<f64> = stderr_r0
        .iter()
        .map(|s| if *s > 0.0 { 1.0 / (s * s) } else { 1e12 })
        .collect();
    let fitted = pava(mean_r0, &weights);
    // E(R0) >= 0 for theta > 0; anything below is Monte Carlo noise.
    let fitted: Vec<f64> = fitted.iter().map(|v| v.max(0.0)).collect();

    let mut fx = Vec::with_capacity(thetas.len() + 1);
    let mut fy = Vec::with_capacity(thetas.len() + 1);
    fx.push(0.0);
    fy.push(0.0);
    fx.extend_from_slice(thetas);
    fy.extend_from_slice(&fitted);
    let forward = MonotoneCubic::new(fx, fy)?;

    // Pool equal fitted values into single inverse knots.
    let mut ix = vec![0.0];
    let mut iy = vec![0.0];
    let mut i = 0;
    while i < fitted.len() {
        let mut j = i;
        let mut wsum = weights[i];
        let mut tsum = weights[i] * thetas[i];
        while j + 1 < fitted.len() && fitted[j + 1] == fitted[i] {
            j += 1;
            wsum += weights[j];
            tsum += weights[j] * thetas[j];
        }
        if fitted[i] > 0.0 {
            ix.push(fitted[i]);
            iy.push(tsum / wsum);
        }
        i = j + 1;
    }
    if ix.len() < 2 {
        return Err(Error::table(format!(
            "slice (n={n}, {}) degenerated to a single inverse knot",
            slice.label()
        )));
    }
    let inverse = MonotoneCubic::new(ix, iy)?;
    Ok(SliceMaps {
        n,
        slice,
        forward,
        inverse,
    })
}

/// A calibrated estimator table.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    surface: R0Surface,
    fits: Vec<FitRecord>,
    /// Coarse groups (rounded `R0/n`, mean Gaussian-limit Sharpe), isotonic.
    a_groups: Vec<(f64, f64)>,
    b_over_a_slope: f64,
    built_at: String,
    // Derived, rebuilt deterministically from the fields above.
    slices: Vec<SliceMaps>,
    a_curve: MonotoneCubic,
}

impl CalibrationTable {
    /// Run the Monte Carlo surface and assemble the table.
    pub fn build(
        grid: &SurfaceGrid,
        n_avg: u64,
        permutations: u64,
        master_seed: u64,
        built_at: &str,
        surface_options: &SurfaceOptions,
        curve_requirements: &CurveRequirements,
    ) -> Result<Self> {
        let surface = mean_r0_surface(grid, n_avg, permutations, master_seed, surface_options)?;
        Self::from_surface(surface, built_at, curve_requirements)
    }

    /// Assemble a table from a pre-measured surface.
    pub fn from_surface(
        surface: R0Surface,
        built_at: &str,
        curve_requirements: &CurveRequirements,
    ) -> Result<Self> {
        surface
            .grid
            .validate()
            .map_err(|e| Error::table(e.to_string()))?;
        if surface.grid.thetas[0] <= 0.0 {
            return Err(Error::table(
                "calibration requires strictly positive thetas",
            ));
        }
        if surface.grid.nus.len() < 4 {
            return Err(Error::table(
                "tail-dependence fits need at least 4 Student slices",
            ));
        }
        let slices = build_all_slices(&surface)?;
        let fits = fit_all(&surface.grid, &slices);
        let (a_groups, b_over_a_slope) = build_simplified_groups(&fits, curve_requirements)?;
        let a_curve = curve_from_groups(&a_groups)?;
        Ok(CalibrationTable {
            surface,
            fits,
            a_groups,
            b_over_a_slope,
            built_at: built_at.to_string(),
            slices,
            a_curve,
        })
    }

    pub fn surface(&self) -> &R0Surface {
        &self.surface
    }

    pub fn grid(&self) -> &SurfaceGrid {
        &self.surface.grid
    }

    pub fn fits(&self) -> &[FitRecord] {
        &self.fits
    }

    pub fn a_groups(&self) -> &[(f64, f64)] {
        &self.a_groups
    }

    /// Slope of the through-origin regression of `b` on `a` over accepted
    /// fits with `a < 1`.
    pub fn b_over_a_slope(&self) -> f64 {
        self.b_over_a_slope
    }

    pub fn built_at(&self) -> &str {
        &self.built_at
    }

    pub fn master_seed(&self) -> u64 {
        self.surface.master_seed
    }

    pub fn n_avg(&self) -> u64 {
        self.surface.n_avg
    }

    pub fn permutations(&self) -> u64 {
        self.surface.permutations
    }

    pub fn min_n(&self) -> u32 {
        self.surface.grid.ns[0]
    }

    pub fn max_n(&self) -> u32 {
        *self.surface.grid.ns.last().unwrap()
    }

    pub fn min_student_nu(&self) -> f64 {
        self.surface.grid.nus[0]
    }

    pub fn slice(&self, n: u32, slice: SliceFamily) -> Option<&SliceMaps> {
        self.slices.iter().find(|s| s.n == n && s.slice == slice)
    }

    /// Analytic slope `d E(R0) / d theta` of a grid slice at `theta`.
    pub fn forward_derivative(&self, n: u32, slice: SliceFamily, theta: f64) -> Result<f64> {
        let maps = self
            .slice(n, slice)
            .ok_or_else(|| Error::table(format!("no slice (n={n}, {})", slice.label())))?;
        Ok(maps.forward_slope(theta))
    }

    /// Tail-dependence fit at `(r0, n)` for a grid length `n`.
    pub fn fit_nu_dependence(&self, r0: f64, n: u32) -> Result<FitRecord> {
        if !self.surface.grid.ns.contains(&n) {
            return Err(Error::table(format!("n = {n} is not a grid length")));
        }
        let maps: Vec<&SliceMaps> = self.slices.iter().filter(|s| s.n == n).collect();
        fit_nu_at(&maps, r0, n)
    }

    /// Tail index at which an asset with record level `r0_high` and Student
    /// tail `nu` stops outranking a Gaussian asset with record level
    /// `r0_low` (both at length `n`): solves
    /// `a(high) - b(high) nu^{-3/2} = a(low)`.
    pub fn rank_crossover_nu(&self, r0_low: f64, r0_high: f64, n: u32) -> Result<f64> {
        let low = self.fit_nu_dependence(r0_low, n)?;
        let high = self.fit_nu_dependence(r0_high, n)?;
        let gap = high.a - low.a;
        if gap <= 0.0 || high.b <= 0.0 {
            return Err(Error::numeric(
                "rank crossover undefined: fitted curves do not cross at positive nu",
            ));
        }
        Ok((high.b / gap).powf(2.0 / 3.0))
    }

    /// Evaluate the coarse-grained Gaussian-limit curve at `r = R0 / n`.
    /// Returns the value and whether `|r|` exceeded the calibrated range.
    pub fn a_curve_value(&self, r: f64) -> (f64, bool) {
        let magnitude = r.abs();
        let clamped = magnitude > self.a_curve.max_x();
        let a = self.a_curve.eval(magnitude);
        (if r < 0.0 { -a } else { a }, clamped)
    }

    /// Invert a record level through the per-(n, nu) maps with bilinear
    /// blending: linear in `n` between bracketing grid lengths and linear in
    /// `x = nu^{-3/2}` between bracketing tail slices (the Gaussian slice
    /// sits at `x = 0`).
    pub fn invert_r0(&self, r0: f64, n: u32, nu: NuQuery) -> Result<InverseEval> {
        let grid = &self.surface.grid;
        if n < self.min_n() || n > self.max_n() {
            return Err(Error::table(format!(
                "series length {n} outside calibrated range [{}, {}]",
                self.min_n(),
                self.max_n()
            )));
        }

        // x-axis over tail slices, ascending: gaussian first when present.
        let mut axis: Vec<(f64, SliceFamily)> = Vec::new();
        if grid.include_gaussian {
            axis.push((0.0, SliceFamily::Gaussian));
        }
        let mut students: Vec<(f64, SliceFamily)> = grid
            .nus
            .iter()
            .map(|&v| (v.powf(-1.5), SliceFamily::Student(v)))
            .collect();
        students.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        axis.extend(students);

        let (x_query, mut nu_clamped) = match nu {
            NuQuery::Gaussian => (0.0, false),
            NuQuery::Student(v) => {
                if !(v > 2.0) || !v.is_finite() {
                    return Err(Error::invalid("student query needs finite nu > 2"));
                }
                (v.powf(-1.5), false)
            }
        };
        let x_min = axis.first().unwrap().0;
        let x_max = axis.last().unwrap().0;
        let x = if x_query > x_max {
            nu_clamped = true;
            x_max
        } else if x_query < x_min {
            nu_clamped = true;
            x_min
        } else {
            x_query
        };

        let xs: Vec<f64> = axis.iter().map(|a| a.0).collect();
        let (xi_lo, xi_hi, wx) = bracket(&xs, x);
        let ns_f: Vec<f64> = grid.ns.iter().map(|&v| v as f64).collect();
        let (ni_lo, ni_hi, wn) = bracket(&ns_f, n as f64);

        let mut theta = 0.0;
        let mut r0_clamped = false;
        for (ni, wn_c) in [(ni_lo, 1.0 - wn), (ni_hi, wn)] {
            for (xi, wx_c) in [(xi_lo, 1.0 - wx), (xi_hi, wx)] {
                let weight = wn_c * wx_c;
                if weight == 0.0 {
                    continue;
                }
                let maps = self
                    .slice(grid.ns[ni], axis[xi].1)
                    .ok_or_else(|| Error::table("missing slice during inversion"))?;
                let (t, clamped) = maps.inverse_theta(r0);
                theta += weight * t;
                r0_clamped |= clamped;
            }
        }
        Ok(InverseEval {
            theta,
            r0_clamped,
            nu_clamped,
        })
    }

    /// SHA-256 of the serialized payload, as stored in the file header.
    pub fn checksum(&self) -> String {
        sha256_hex(self.payload().as_bytes())
    }

    fn payload(&self) -> String {
        let mut out = String::new();
        let grid = &self.surface.grid;
        out.push_str(&format!("built {}\n", self.built_at));
        out.push_str(&format!("seed {}\n", self.surface.master_seed));
        out.push_str(&format!("n-avg {}\n", self.surface.n_avg));
        out.push_str(&format!("permutations {}\n", self.surface.permutations));
        out.push_str("ns");
        for n in &grid.ns {
            out.push_str(&format!(" {n}"));
        }
        out.push('\n');
        out.push_str("thetas");
        for t in &grid.thetas {
            out.push_str(&format!(" {}", fmt_f64(*t)));
        }
        out.push('\n');
        out.push_str("nus");
        for v in &grid.nus {
            out.push_str(&format!(" {}", fmt_f64(*v)));
        }
        out.push('\n');
        out.push_str(&format!("gaussian-slice {}\n", grid.include_gaussian));
        out.push_str(&format!("surface-rows {}\n", self.surface.rows.len()));
        for row in &self.surface.rows {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                row.n,
                fmt_f64(row.theta),
                row.slice.label(),
                fmt_f64(row.mean_r0),
                fmt_f64(row.stderr_r0),
            ));
        }
        out.push_str(&format!("fit-records {}\n", self.fits.len()));
        for f in &self.fits {
            out.push_str(&format!(
                "{} {} {} {} {} {} {}\n",
                fmt_f64(f.r0),
                f.n,
                fmt_f64(f.a),
                fmt_f64(f.b),
                fmt_f64(f.p_value_b),
                fmt_f64(f.mean_sq_residual),
                u8::from(f.accepted),
            ));
        }
        out.push_str(&format!("a-curve {}\n", self.a_groups.len()));
        for (r, a) in &self.a_groups {
            out.push_str(&format!("{} {}\n", fmt_f64(*r), fmt_f64(*a)));
        }
        out.push_str(&format!(
            "b-over-a-slope {}\n",
            fmt_f64(self.b_over_a_slope)
        ));
        out.push_str("end\n");
        out
    }

    /// Serialize the table: magic line, version, payload checksum, payload.
    pub fn to_string_repr(&self) -> String {
        let payload = self.payload();
        format!(
            "{TABLE_MAGIC}\nversion {TABLE_FORMAT_VERSION}\nchecksum {}\n{payload}",
            sha256_hex(payload.as_bytes())
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_string_repr())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        fs::File::open(path)?.read_to_string(&mut text)?;
        Self::from_string_repr(&text)
    }

    pub fn from_string_repr(text: &str) -> Result<Self> {
        let mut remainder = text;
        let magic = take_line(&mut remainder).ok_or_else(|| Error::table("empty table file"))?;
        if magic != TABLE_MAGIC {
            return Err(Error::table("not a calibration table file"));
        }
        let version_line =
            take_line(&mut remainder).ok_or_else(|| Error::table("missing version line"))?;
        let version: u32 = version_line
            .strip_prefix("version ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::table("malformed version line"))?;
        if version != TABLE_FORMAT_VERSION {
            return Err(Error::table(format!(
                "format version {version} unsupported (expected {TABLE_FORMAT_VERSION})"
            )));
        }
        let checksum_line =
            take_line(&mut remainder).ok_or_else(|| Error::table("missing checksum line"))?;
        let stored = checksum_line
            .strip_prefix("checksum ")
            .ok_or_else(|| Error::table("malformed checksum line"))?;
        let actual = sha256_hex(remainder.as_bytes());
        if stored != actual {
            return Err(Error::table(
                "checksum mismatch: file is truncated or corrupted",
            ));
        }
        parse_payload(remainder)
    }
}

/// Result of a table inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseEval {
    pub theta: f64,
    /// The record level exceeded the calibrated range of at least one
    /// blended slice; the value saturates at the slice maximum.
    pub r0_clamped: bool,
    /// The requested tail index was outside the calibrated slice axis.
    pub nu_clamped: bool,
}

fn build_all_slices(surface: &R0Surface) -> Result<Vec<SliceMaps>> {
    let grid = &surface.grid;
    let mut out = Vec::new();
    for &n in &grid.ns {
        for slice in grid.slices() {
            let rows: Vec<&SurfaceRow> = surface.slice_rows(n, slice);
            if rows.len() != grid.thetas.len() {
                return Err(Error::table(format!(
                    "slice (n={n}, {}) has {} rows, expected {}",
                    slice.label(),
                    rows.len(),
                    grid.thetas.len()
                )));
            }
            let thetas: Vec<f64> = rows.iter().map(|r| r.theta).collect();
            let means: Vec<f64> = rows.iter().map(|r| r.mean_r0).collect();
            let errs: Vec<f64> = rows.iter().map(|r| r.stderr_r0).collect();
            out.push(build_inverse_map(n, slice, &thetas, &means, &errs)?);
        }
    }
    Ok(out)
}

fn fit_nu_at(maps_for_n: &[&SliceMaps], r0: f64, n: u32) -> Result<FitRecord> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut student_points = 0;
    for maps in maps_for_n {
        // Skip slices where the record level saturates the calibrated range;
        // a clamped inversion would bend the fit.
        if r0 > maps.max_r0() || r0 <= 0.0 {
            continue;
        }
        // The Gaussian slice enters at x = 0: the intercept is by definition
        // the Gaussian-increments value, so the limit anchors the fit.
        let x = match maps.slice {
            SliceFamily::Student(v) => {
                student_points += 1;
                v.powf(-1.5)
            }
            SliceFamily::Gaussian => 0.0,
        };
        let (theta, _) = maps.inverse_theta(r0);
        xs.push(x);
        ys.push(theta);
    }
    if student_points < 4 {
        return Err(Error::table(format!(
            "tail fit at (r0={r0}, n={n}) has {student_points} usable tail slices; at least 4 required"
        )));
    }
    let fit = ols(&xs, &ys)?;
    let accepted =
        fit.p_value_slope <= FIT_P_VALUE_MAX && fit.mean_sq_residual <= FIT_MEAN_SQ_RESIDUAL_MAX;
    Ok(FitRecord {
        r0,
        n,
        a: fit.intercept,
        b: -fit.slope,
        p_value_b: fit.p_value_slope,
        mean_sq_residual: fit.mean_sq_residual,
        accepted,
    })
}

fn fit_all(grid: &SurfaceGrid, slices: &[SliceMaps]) -> Vec<FitRecord> {
    let mut fits = Vec::new();
    for &n in &grid.ns {
        let maps_for_n: Vec<&SliceMaps> = slices.iter().filter(|s| s.n == n).collect();
        for r0 in 1..=n {
            if let Ok(fit) = fit_nu_at(&maps_for_n, r0 as f64, n) {
                fits.push(fit);
            }
        }
    }
    fits
}

/// Group accepted fits by `R0/n` rounded to 0.01, average `a` per group,
/// project isotonic, and regress `b` on `a` through the origin over `a < 1`.
fn build_simplified_groups(
    fits: &[FitRecord],
    requirements: &CurveRequirements,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let accepted: Vec<&FitRecord> = fits
        .iter()
        .filter(|f| f.accepted && f.n >= requirements.collapse_min_n)
        .collect();
    if accepted.len() < requirements.min_accepted {
        return Err(Error::table(format!(
            "only {} accepted tail fits in the collapse region (n >= {}); {} required",
            accepted.len(),
            requirements.collapse_min_n,
            requirements.min_accepted
        )));
    }

    let mut grouped: std::collections::BTreeMap<i64, (f64, usize)> =
        std::collections::BTreeMap::new();
    for fit in &accepted {
        let key = (fit.r0 / fit.n as f64 * 100.0).round() as i64;
        if key <= 0 {
            continue;
        }
        let entry = grouped.entry(key).or_insert((0.0, 0));
        entry.0 += fit.a;
        entry.1 += 1;
    }
    if grouped.is_empty() {
        return Err(Error::table(
            "no positive coarse groups for the simplified curve",
        ));
    }
    let min_r = *grouped.keys().next().unwrap() as f64 / 100.0;
    let max_r = *grouped.keys().next_back().unwrap() as f64 / 100.0;
    if min_r > requirements.min_low_r || max_r < requirements.min_high_r {
        return Err(Error::table(format!(
            "accepted fits cover r in [{min_r:.2}, {max_r:.2}]; need low <= {} and high >= {}",
            requirements.min_low_r, requirements.min_high_r
        )));
    }

    let rs: Vec<f64> = grouped.keys().map(|k| *k as f64 / 100.0).collect();
    let means: Vec<f64> = grouped
        .values()
        .map(|(sum, count)| sum / *count as f64)
        .collect();
    let counts: Vec<f64> = grouped.values().map(|(_, count)| *count as f64).collect();
    let iso = pava(&means, &counts);
    let groups: Vec<(f64, f64)> = rs
        .iter()
        .zip(iso.iter())
        .map(|(r, a)| (*r, a.max(0.0)))
        .collect();

    let (bx, by): (Vec<f64>, Vec<f64>) = accepted
        .iter()
        .filter(|f| f.a > 0.0 && f.a < 1.0)
        .map(|f| (f.a, f.b))
        .unzip();
    let slope = through_origin_slope(&bx, &by)?;
    Ok((groups, slope))
}

fn curve_from_groups(groups: &[(f64, f64)]) -> Result<MonotoneCubic> {
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for (r, a) in groups {
        xs.push(*r);
        ys.push(*a);
    }
    MonotoneCubic::new(xs, ys).map_err(|e| Error::table(format!("simplified curve: {e}")))
}

fn bracket(grid: &[f64], x: f64) -> (usize, usize, f64) {
    if grid.len() == 1 || x <= grid[0] {
        return (0, 0, 0.0);
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last, last, 0.0);
    }
    let hi = grid.partition_point(|v| *v <= x);
    let lo = hi - 1;
    let w = (x - grid[lo]) / (grid[hi] - grid[lo]);
    (lo, hi, w)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn take_line<'a>(text: &mut &'a str) -> Option<&'a str> {
    if text.is_empty() {
        return None;
    }
    match text.find('\n') {
        Some(pos) => {
            let line = &text[..pos];
            *text = &text[pos + 1..];
            Some(line)
        }
        None => {
            let line = *text;
            *text = "";
            Some(line)
        }
    }
}

fn parse_payload(payload: &str) -> Result<CalibrationTable> {
    let mut lines = payload.lines();
    let mut next = || {
        lines
            .next()
            .ok_or_else(|| Error::table("unexpected end of table payload"))
    };

    let built_at = next()?
        .strip_prefix("built ")
        .ok_or_else(|| Error::table("missing built line"))?
        .to_string();
    let master_seed: u64 = parse_kv(next()?, "seed")?;
    let n_avg: u64 = parse_kv(next()?, "n-avg")?;
    let permutations: u64 = parse_kv(next()?, "permutations")?;
    let ns = parse_list::<u32>(next()?, "ns")?;
    let thetas = parse_list::<f64>(next()?, "thetas")?;
    let nus = parse_list::<f64>(next()?, "nus")?;
    let include_gaussian: bool = parse_kv(next()?, "gaussian-slice")?;

    let row_count: usize = parse_kv(next()?, "surface-rows")?;
    let mut rows = Vec::with_capacity(row_count);
    for _ in 0..row_count {
        let fields: Vec<&str> = next()?.split(' ').collect();
        if fields.len() != 5 {
            return Err(Error::table("malformed surface row"));
        }
        let slice = if fields[2] == "gaussian" {
            SliceFamily::Gaussian
        } else {
            SliceFamily::Student(parse_num(fields[2])?)
        };
        rows.push(SurfaceRow {
            n: parse_num(fields[0])?,
            theta: parse_num(fields[1])?,
            slice,
            mean_r0: parse_num(fields[3])?,
            stderr_r0: parse_num(fields[4])?,
        });
    }

    let fit_count: usize = parse_kv(next()?, "fit-records")?;
    let mut fits = Vec::with_capacity(fit_count);
    for _ in 0..fit_count {
        let fields: Vec<&str> = next()?.split(' ').collect();
        if fields.len() != 7 {
            return Err(Error::table("malformed fit record"));
        }
        fits.push(FitRecord {
            r0: parse_num(fields[0])?,
            n: parse_num(fields[1])?,
            a: parse_num(fields[2])?,
            b: parse_num(fields[3])?,
            p_value_b: parse_num(fields[4])?,
            mean_sq_residual: parse_num(fields[5])?,
            accepted: fields[6] == "1",
        });
    }

    let group_count: usize = parse_kv(next()?, "a-curve")?;
    let mut a_groups = Vec::with_capacity(group_count);
    for _ in 0..group_count {
        let fields: Vec<&str> = next()?.split(' ').collect();
        if fields.len() != 2 {
            return Err(Error::table("malformed a-curve group"));
        }
        a_groups.push((parse_num(fields[0])?, parse_num(fields[1])?));
    }

    let b_over_a_slope: f64 = parse_kv(next()?, "b-over-a-slope")?;
    if next()? != "end" {
        return Err(Error::table("missing end marker"));
    }

    let surface = R0Surface {
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
    };
    surface
        .grid
        .validate()
        .map_err(|e| Error::table(e.to_string()))?;
    let slices = build_all_slices(&surface)?;
    let a_curve = curve_from_groups(&a_groups)?;
    Ok(CalibrationTable {
        surface,
        fits,
        a_groups,
        b_over_a_slope,
        built_at,
        slices,
        a_curve,
    })
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    line.strip_prefix(key)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| Error::table(format!("malformed `{key}` line: {line:?}")))
}

fn parse_list<T: std::str::FromStr>(line: &str, key: &str) -> Result<Vec<T>> {
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::table(format!("malformed `{key}` line")))?;
    rest.split_whitespace()
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::table(format!("bad value in `{key}`: {tok:?}")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::table(format!("bad numeric token {tok:?}")))
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them all).
//!
//! Criteria 8-11 share the full-scale calibration table. Building its Monte
//! Carlo surface takes roughly 70 minutes on two cores, so the surface is
//! cached under `target/mc-cache/` keyed by its exact parameters; delete the
//! directory to force a cold rebuild. Three clauses that track published
//! anchor values are not reproduced by the simulated model itself and are
//! expected red; the README's "Known deviations" section carries the
//! analysis.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::OnceLock;

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Gamma, Normal};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use record_sharpe::analytic::{
    driftless_record_pmf, expected_records_from_survival, gaussian_expected_records,
    large_drift_record_rate, student3_convolution_density_asymptotic,
    student3_convolution_density_at_zero, student3_expected_records,
    survival_from_sign_probabilities, RateFamily,
};
use record_sharpe::calibration::{CalibrationTable, CurveRequirements, NuQuery};
use record_sharpe::estimator::{
    efficiency_study, estimate_sharpe, vanilla_sharpe, EstimateOptions, Method,
};
use record_sharpe::market::{
    ranking_divergence, rolling_estimates, synthetic_panel, threshold_backtest, BacktestMethod,
    EstimateRow, RollingEstimates, RollingOptions,
};
use record_sharpe::records::{count_records, r0_statistic};
use record_sharpe::series::{PricePath, ReturnSeries};
use record_sharpe::synthetic::{
    generate_series, mean_r0_surface, surface_cache_key, IncrementSpec, R0Surface, SliceFamily,
    SurfaceGrid, SurfaceOptions,
};

const DESK_N_AVG: u64 = 10_000;
const DESK_PERMUTATIONS: u64 = 1000;
const DESK_SEED: u64 = 42;

fn desk_table() -> &'static CalibrationTable {
    static TABLE: OnceLock<CalibrationTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let grid = SurfaceGrid::desk_scale();
        let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/mc-cache");
        let key = surface_cache_key(&grid, DESK_N_AVG, DESK_PERMUTATIONS, DESK_SEED);
        let path = dir.join(format!("surface-{key}.csv"));
        let surface = match fs::File::open(&path) {
            Ok(file) => {
                let surface =
                    R0Surface::read_csv(BufReader::new(file)).expect("cached surface parses");
                assert_eq!(surface.grid, grid, "cache key collision");
                assert_eq!(
                    (surface.n_avg, surface.permutations, surface.master_seed),
                    (DESK_N_AVG, DESK_PERMUTATIONS, DESK_SEED)
                );
                surface
            }
            Err(_) => {
                let surface = mean_r0_surface(
                    &grid,
                    DESK_N_AVG,
                    DESK_PERMUTATIONS,
                    DESK_SEED,
                    &SurfaceOptions::default(),
                )
                .expect("surface builds");
                let _ = fs::create_dir_all(&dir);
                let mut buf = Vec::new();
                surface.write_csv(&mut buf).expect("surface serializes");
                let tmp = path.with_extension("tmp");
                if fs::write(&tmp, &buf).is_ok() {
                    let _ = fs::rename(&tmp, &path);
                }
                surface
            }
        };
        CalibrationTable::from_surface(surface, "acceptance-fixture", &CurveRequirements::default())
            .expect("desk-scale table assembles")
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

struct MomentTracker {
    sum: f64,
    sum_sq: f64,
    count: f64,
}

impl MomentTracker {
    fn from(values: impl Iterator<Item = f64>) -> Self {
        let mut t = MomentTracker {
            sum: 0.0,
            sum_sq: 0.0,
            count: 0.0,
        };
        for v in values {
            t.sum += v;
            t.sum_sq += v * v;
            t.count += 1.0;
        }
        t
    }

    fn mean(&self) -> f64 {
        self.sum / self.count
    }

    fn variance(&self) -> f64 {
        (self.sum_sq / self.count - self.mean() * self.mean()) * self.count / (self.count - 1.0)
    }

    fn stderr(&self) -> f64 {
        (self.variance() / self.count).sqrt()
    }
}

// ---------------------------------------------------------------- 1 ------

#[test]
fn criterion_01_record_identities_and_antisymmetry() {
    let start = std::time::Instant::now();
    let mut checked_r0 = 0u32;
    for i in 0..10_000u64 {
        let n = 1 + (i as usize * 37) % 500;
        let seed = 1_000_000 + i;
        let values: Vec<f64> = match i % 3 {
            0 => generate_series(&IncrementSpec::gaussian(0.02, 1.0).unwrap(), n, seed)
                .unwrap()
                .values()
                .to_vec(),
            1 => generate_series(&IncrementSpec::student(3.0, -0.05, 1.0).unwrap(), n, seed)
                .unwrap()
                .values()
                .to_vec(),
            _ => {
                let mut rng = Pcg64Mcg::seed_from_u64(seed);
                (0..n).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect()
            }
        };
        let series = ReturnSeries::new(values).unwrap();
        let summary = count_records(&PricePath::from_returns(&series));
        assert_eq!(
            summary.r_plus + summary.t_minus,
            summary.n + 1,
            "series {i}"
        );
        assert_eq!(
            summary.r_minus + summary.t_plus,
            summary.n + 1,
            "series {i}"
        );
        let negated = count_records(&PricePath::from_returns(&series.negated()));
        assert_eq!(summary.r_plus, negated.r_minus, "series {i}");
        assert_eq!(summary.t_minus, negated.t_plus, "series {i}");
        if n >= 2 && i % 10 == 0 {
            let plus = r0_statistic(&series, 20, seed).unwrap().r0.unwrap();
            let minus = r0_statistic(&series.negated(), 20, seed)
                .unwrap()
                .r0
                .unwrap();
            assert_eq!(plus, -minus, "series {i}");
            checked_r0 += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = elapsed < 10.0;
    println!(
        "criterion 1: {} — 10000 series, identities exact, {checked_r0} r0 antisymmetry checks, {elapsed:.1}s (< 10s)",
        verdict(ok)
    );
    assert!(ok, "identity suite took {elapsed:.1}s");
}

// ---------------------------------------------------------------- 2 ------

#[test]
fn criterion_02_universality_of_driftless_record_law() {
    const WALKS: u64 = 1_000_000;
    const N_MAX: usize = 10;
    let law_names = ["gaussian", "student3", "uniform"];
    // counts[law][n-1][r-1] over prefixes of each walk
    let counts: Vec<Vec<Vec<u64>>> = (0..3usize)
        .map(|law| {
            (0..100u64)
                .into_par_iter()
                .map(|chunk| {
                    let mut local = vec![vec![0u64; N_MAX + 1]; N_MAX];
                    let mut rng = Pcg64Mcg::seed_from_u64(2_000_000 + law as u64 * 1000 + chunk);
                    let normal = Normal::new(0.0, 1.0).unwrap();
                    let chi2 = Gamma::new(1.5, 2.0).unwrap();
                    for _ in 0..WALKS / 100 {
                        let mut s = 0.0;
                        let mut mx = 0.0;
                        let mut records = 1usize;
                        for n in 1..=N_MAX {
                            let draw: f64 = match law {
                                0 => normal.sample(&mut rng),
                                1 => {
                                    let z: f64 = normal.sample(&mut rng);
                                    let w: f64 = chi2.sample(&mut rng);
                                    z * (1.0f64 / w).sqrt()
                                }
                                _ => rng.random_range(-1.0..1.0),
                            };
                            s += draw;
                            if s > mx {
                                mx = s;
                                records += 1;
                            }
                            local[n - 1][records - 1] += 1;
                        }
                    }
                    local
                })
                .reduce(
                    || vec![vec![0u64; N_MAX + 1]; N_MAX],
                    |mut a, b| {
                        for (ra, rb) in a.iter_mut().zip(b) {
                            for (ca, cb) in ra.iter_mut().zip(rb) {
                                *ca += cb;
                            }
                        }
                        a
                    },
                )
        })
        .collect();

    let mut worst_tv: f64 = 0.0;
    let mut worst_mean_sigma: f64 = 0.0;
    for n in 1..=N_MAX {
        let law = driftless_record_pmf(n).unwrap();
        for (li, law_counts) in counts.iter().enumerate() {
            let tracker = MomentTracker {
                sum: law_counts[n - 1]
                    .iter()
                    .enumerate()
                    .map(|(r, c)| (r + 1) as f64 * *c as f64)
                    .sum(),
                sum_sq: law_counts[n - 1]
                    .iter()
                    .enumerate()
                    .map(|(r, c)| ((r + 1) as f64).powi(2) * *c as f64)
                    .sum(),
                count: WALKS as f64,
            };
            let sigmas = (tracker.mean() - law.mean()).abs() / tracker.stderr();
            worst_mean_sigma = worst_mean_sigma.max(sigmas);
            assert!(
                sigmas <= 3.0,
                "law {} at n={n}: mean {} vs {} ({sigmas:.1} sigma)",
                law_names[li],
                tracker.mean(),
                law.mean()
            );
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let tv: f64 = (0..=N_MAX)
                    .map(|r| {
                        let pa = counts[a][n - 1][r] as f64 / WALKS as f64;
                        let pb = counts[b][n - 1][r] as f64 / WALKS as f64;
                        (pa - pb).abs()
                    })
                    .sum::<f64>()
                    / 2.0;
                worst_tv = worst_tv.max(tv);
                assert!(
                    tv < 0.005,
                    "TV({}, {}) at n={n} is {tv}",
                    law_names[a],
                    law_names[b]
                );
            }
        }
    }
    println!(
        "criterion 2: PASS — worst pairwise TV {worst_tv:.4} (< 0.005), worst mean deviation {worst_mean_sigma:.2} sigma (<= 3)"
    );
}

// ---------------------------------------------------------------- 3 ------

#[test]
fn criterion_03_driftless_moment_asymptotics() {
    const WALKS: u64 = 100_000;
    const N: usize = 400;
    let records: Vec<f64> = (0..100u64)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = Pcg64Mcg::seed_from_u64(3_000_000 + chunk);
            let normal = Normal::new(0.0, 1.0).unwrap();
            (0..WALKS / 100)
                .map(|_| {
                    let mut s = 0.0;
                    let mut mx = 0.0;
                    let mut records = 1u32;
                    for _ in 0..N {
                        s += normal.sample(&mut rng);
                        if s > mx {
                            mx = s;
                            records += 1;
                        }
                    }
                    records as f64
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    let tracker = MomentTracker::from(records.iter().copied());
    let asym_mean = 2.0 * (N as f64 / std::f64::consts::PI).sqrt();
    let asym_var = (2.0 - 4.0 / std::f64::consts::PI) * N as f64;
    let mean_rel = (tracker.mean() - asym_mean).abs() / asym_mean;
    let var_rel = (tracker.variance() - asym_var).abs() / asym_var;
    let mean_ok = mean_rel <= 0.02;
    // Known red: the exact variance at n = 400 sits 7.4% below the
    // asymptotic slope (the relative gap decays like ~1.5/sqrt(n)), so the
    // 5% demand cannot be met at this length by any correct sampler.
    let var_ok = var_rel <= 0.05;
    println!(
        "criterion 3: {} — mean rel err {:.2}% (tol 2%) {}, variance rel err {:.2}% (tol 5%) {}",
        verdict(mean_ok && var_ok),
        mean_rel * 100.0,
        verdict(mean_ok),
        var_rel * 100.0,
        verdict(var_ok)
    );
    assert!(mean_ok, "mean off by {:.2}%", mean_rel * 100.0);
    assert!(var_ok, "variance off by {:.2}%", var_rel * 100.0);
}

// ---------------------------------------------------------------- 4 ------

#[test]
fn criterion_04_convolution_density_at_zero() {
    // spot values
    let spot1 = student3_convolution_density_at_zero(1, 1.0).unwrap();
    let spot2 = student3_convolution_density_at_zero(2, 1.0).unwrap();
    let spot_ok = (spot1 - 2.0 / std::f64::consts::PI).abs() < 1e-14
        && (spot2 - 5.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-14;

    // quadrature oracle to 1e-6 for n <= 20
    let mut worst_quad: f64 = 0.0;
    for n in 1..=20 {
        let exact = student3_convolution_density_at_zero(n, 1.0).unwrap();
        let oracle = quadrature_density(n);
        worst_quad = worst_quad.max((exact - oracle).abs());
    }
    let quad_ok = worst_quad < 1e-6;

    // two-term asymptotic: 1% from n = 100, 0.1% at n = 10^4
    let mut worst_asym: f64 = 0.0;
    for n in [100usize, 252, 504, 1000, 5000] {
        let exact = student3_convolution_density_at_zero(n, 1.0).unwrap();
        let asym = student3_convolution_density_asymptotic(n, 1.0).unwrap();
        worst_asym = worst_asym.max((exact - asym).abs() / exact);
    }
    let e4 = student3_convolution_density_at_zero(10_000, 1.0).unwrap();
    let a4 = student3_convolution_density_asymptotic(10_000, 1.0).unwrap();
    let tail_rel = (e4 - a4).abs() / e4;
    let asym_ok = worst_asym < 0.01 && tail_rel < 1e-3;

    let ok = spot_ok && quad_ok && asym_ok;
    println!(
        "criterion 4: {} — spot values {}, quadrature max err {worst_quad:.2e} (< 1e-6), asymptotic worst {:.3}% (n >= 100, tol 1%), {:.4}% at n=10^4 (tol 0.1%)",
        verdict(ok),
        verdict(spot_ok),
        worst_asym * 100.0,
        tail_rel * 100.0
    );
    assert!(ok);
}

fn quadrature_density(n: usize) -> f64 {
    let upper = 80.0;
    let panels = 1 << 20;
    let h = upper / panels as f64;
    let f = |u: f64| (1.0 + u).powi(n as i32) * (-(n as f64) * u).exp();
    let mut total = f(0.0) + f(upper);
    for k in 1..panels {
        total += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    total * h / 3.0 / std::f64::consts::PI
}

// ---------------------------------------------------------------- 5 ------

#[test]
fn criterion_05_persistence_and_record_pipeline() {
    // exact driftless persistence: q(n) = C(2n, n) / 4^n
    let q = survival_from_sign_probabilities(&vec![0.5; 30]).unwrap();
    let mut expected = 1.0f64;
    let mut worst_q: f64 = 0.0;
    for (i, &qn) in q.q_minus.iter().enumerate() {
        expected *= (2 * (i + 1) - 1) as f64 / (2 * (i + 1)) as f64;
        worst_q = worst_q.max((qn - expected).abs());
    }
    let m = expected_records_from_survival(&q).unwrap();
    let m1_ok = (m[1] - 1.5).abs() < 1e-12;

    // drifted pipeline vs direct simulation
    const N_MAX: usize = 100;
    const SIGN_WALKS: u64 = 4_000_000;
    const DIRECT_WALKS: u64 = 200_000;
    let theta = 0.05;

    let neg_counts: Vec<u64> = (0..200u64)
        .into_par_iter()
        .map(|chunk| {
            let mut below = vec![0u64; N_MAX];
            let mut rng = Pcg64Mcg::seed_from_u64(5_100_000 + chunk);
            let normal = Normal::new(theta, 1.0).unwrap();
            for _ in 0..SIGN_WALKS / 200 {
                let mut s = 0.0;
                for slot in below.iter_mut() {
                    s += normal.sample(&mut rng);
                    if s < 0.0 {
                        *slot += 1;
                    }
                }
            }
            below
        })
        .reduce(
            || vec![0u64; N_MAX],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let p_neg: Vec<f64> = neg_counts
        .iter()
        .map(|c| *c as f64 / SIGN_WALKS as f64)
        .collect();
    let survival = survival_from_sign_probabilities(&p_neg).unwrap();
    survival.validate().unwrap();
    let pipeline = expected_records_from_survival(&survival).unwrap();

    let direct: Vec<(i64, i64)> = (0..200u64)
        .into_par_iter()
        .map(|chunk| {
            let mut sums = vec![(0i64, 0i64); N_MAX];
            let mut rng = Pcg64Mcg::seed_from_u64(5_200_000 + chunk);
            let normal = Normal::new(theta, 1.0).unwrap();
            for _ in 0..DIRECT_WALKS / 200 {
                let mut s = 0.0;
                let mut mx = 0.0;
                let mut records = 1i64;
                for slot in sums.iter_mut() {
                    s += normal.sample(&mut rng);
                    if s > mx {
                        mx = s;
                        records += 1;
                    }
                    slot.0 += records;
                    slot.1 += records * records;
                }
            }
            sums
        })
        .reduce(
            || vec![(0i64, 0i64); N_MAX],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
                a
            },
        );

    let mut worst_sigma: f64 = 0.0;
    for n in 1..=N_MAX {
        let tracker = MomentTracker {
            sum: direct[n - 1].0 as f64,
            sum_sq: direct[n - 1].1 as f64,
            count: DIRECT_WALKS as f64,
        };
        let sigma = (pipeline[n] - tracker.mean()).abs() / tracker.stderr();
        worst_sigma = worst_sigma.max(sigma);
    }
    let q_ok = worst_q < 1e-12;
    let pipe_ok = worst_sigma <= 3.0;
    let ok = q_ok && m1_ok && pipe_ok;
    println!(
        "criterion 5: {} — driftless q max err {worst_q:.1e} (< 1e-12), m(1) = 1.5 {}, drifted pipeline worst {:.2} sigma (<= 3) over n <= 100",
        verdict(ok),
        verdict(m1_ok),
        worst_sigma
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 6 ------

#[test]
fn criterion_06_small_drift_excess_direction() {
    const SAMPLES: u64 = 100_000;
    let c = 0.001;
    let checkpoints = [25usize, 50, 100, 150, 200];
    let sums: Vec<i64> = (0..100u64)
        .into_par_iter()
        .map(|chunk| {
            let mut excess = vec![0i64; checkpoints.len()];
            let mut rng = Pcg64Mcg::seed_from_u64(6_000_000 + chunk);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let chi2 = Gamma::new(1.5, 2.0).unwrap();
            let mut buf = vec![0.0; 200];
            for _ in 0..SAMPLES / 100 {
                for v in buf.iter_mut() {
                    let z: f64 = normal.sample(&mut rng);
                    let w: f64 = chi2.sample(&mut rng);
                    *v = z * (1.0f64 / w).sqrt();
                }
                // common random numbers: same increments with and without
                // the drift
                let mut s_d = 0.0;
                let mut mx_d = 0.0;
                let mut rec_d = 0i64;
                let mut s_0 = 0.0;
                let mut mx_0 = 0.0;
                let mut rec_0 = 0i64;
                let mut ci = 0;
                for (k, &r) in buf.iter().enumerate() {
                    s_d += r + c;
                    if s_d > mx_d {
                        mx_d = s_d;
                        rec_d += 1;
                    }
                    s_0 += r;
                    if s_0 > mx_0 {
                        mx_0 = s_0;
                        rec_0 += 1;
                    }
                    if k + 1 == checkpoints[ci] {
                        excess[ci] += rec_d - rec_0;
                        ci += 1;
                        if ci == checkpoints.len() {
                            break;
                        }
                    }
                }
            }
            excess
        })
        .reduce(
            || vec![0i64; checkpoints.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let excess: Vec<f64> = sums.iter().map(|s| *s as f64 / SAMPLES as f64).collect();

    let positive = excess.iter().all(|e| *e > 0.0);
    let increasing = excess.windows(2).all(|w| w[1] > w[0]);
    let mut beats_gaussian = true;
    for (i, &n) in checkpoints.iter().enumerate() {
        if n < 50 {
            continue;
        }
        let gaussian_prediction = gaussian_expected_records(c, 1.0, n).unwrap()
            - gaussian_expected_records(0.0, 1.0, n).unwrap();
        if excess[i] <= gaussian_prediction {
            beats_gaussian = false;
        }
    }
    let ok = positive && increasing && beats_gaussian;
    println!(
        "criterion 6: {} — excess positive {}, increasing in n {}, above the gaussian small-drift curve for n >= 50 {} (excess at n=200: {:.4} vs gaussian {:.4}, student-form {:.4})",
        verdict(ok),
        verdict(positive),
        verdict(increasing),
        verdict(beats_gaussian),
        excess[4],
        gaussian_expected_records(c, 1.0, 200).unwrap() - gaussian_expected_records(0.0, 1.0, 200).unwrap(),
        student3_expected_records(c, 1.0, 200).unwrap() - student3_expected_records(0.0, 1.0, 200).unwrap(),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 7 ------

fn measured_slope(family: RateFamily, ratio: f64, samples: u64, seed: u64) -> f64 {
    let (sum100, sum200): (i64, i64) = (0..100u64)
        .into_par_iter()
        .map(|chunk| {
            let mut r100 = 0i64;
            let mut r200 = 0i64;
            let mut rng = Pcg64Mcg::seed_from_u64(seed + chunk);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let chi2 = Gamma::new(1.5, 2.0).unwrap();
            for _ in 0..samples / 100 {
                let mut s = 0.0;
                let mut mx = 0.0;
                let mut count = 1i64;
                for k in 1..=200usize {
                    let draw: f64 = match family {
                        RateFamily::Gaussian => normal.sample(&mut rng),
                        RateFamily::Student3 => {
                            let z: f64 = normal.sample(&mut rng);
                            let w: f64 = chi2.sample(&mut rng);
                            z * (1.0f64 / w).sqrt()
                        }
                    };
                    s += draw + ratio;
                    if s > mx {
                        mx = s;
                        count += 1;
                    }
                    if k == 100 {
                        r100 += count;
                    }
                }
                r200 += count;
            }
            (r100, r200)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    (sum200 - sum100) as f64 / samples as f64 / 100.0
}

#[test]
fn criterion_07_large_drift_record_rates() {
    const SAMPLES: u64 = 100_000;
    let mut worst_rel: f64 = 0.0;
    for (family, ratio) in [
        (RateFamily::Student3, 3.0),
        (RateFamily::Student3, 5.0),
        (RateFamily::Gaussian, 2.0),
        (RateFamily::Gaussian, 3.0),
    ] {
        let slope = measured_slope(family, ratio, SAMPLES, 7_000_000);
        let formula = large_drift_record_rate(family, ratio).unwrap().rate;
        let rel = (slope - formula).abs() / formula;
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= 0.02,
            "{family:?} at ratio {ratio}: slope {slope} vs {formula}"
        );
    }

    // the measured gaussian-minus-student rate difference changes sign
    let mut diffs = Vec::new();
    for ratio in [0.5, 1.0, 2.0, 3.0, 5.0] {
        let g = measured_slope(RateFamily::Gaussian, ratio, SAMPLES, 7_100_000);
        let s = measured_slope(RateFamily::Student3, ratio, SAMPLES, 7_200_000);
        diffs.push(g - s);
    }
    let sign_change = diffs.first().unwrap() < &0.0 && diffs.last().unwrap() > &0.0;
    let ok = worst_rel <= 0.02 && sign_change;
    println!(
        "criterion 7: {} — worst slope error {:.2}% (tol 2%), rate difference spans {:+.4} to {:+.4} (sign change {})",
        verdict(ok),
        worst_rel * 100.0,
        diffs.first().unwrap(),
        diffs.last().unwrap(),
        verdict(sign_change)
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 8 ------

#[test]
fn criterion_08_held_out_estimation_and_vanilla_bias() {
    let table = desk_table();
    const REPLICAS: u64 = 10_000;
    let theta = 0.05;
    let spec = IncrementSpec::student(4.0, theta, 1.0).unwrap();
    let pairs: Vec<(f64, f64)> = (0..REPLICAS)
        .into_par_iter()
        .map(|i| {
            let series = generate_series(&spec, 252, 8_000_000 + i).unwrap();
            let options = EstimateOptions {
                method: Method::TableInverse,
                permutations: DESK_PERMUTATIONS,
                seed: 8_500_000 + i,
                periods_per_year: None,
            };
            let record = estimate_sharpe(&series, table, &options).unwrap().theta;
            let vanilla = vanilla_sharpe(&series).unwrap();
            (record, vanilla)
        })
        .collect();
    let record = MomentTracker::from(pairs.iter().map(|p| p.0));
    let vanilla = MomentTracker::from(pairs.iter().map(|p| p.1));
    let record_sigma = (record.mean() - theta) / record.stderr();
    let vanilla_sigma = (vanilla.mean() - theta) / vanilla.stderr();
    let record_ok = record_sigma.abs() <= 3.0;
    // "statistically significant margin" read at the conventional 5% level.
    // Known red: the vanilla estimator shows no measurable overshoot on
    // variance-standardized Student increments at nu = 4, n = 252.
    let vanilla_ok = vanilla_sigma >= 2.0;
    let ok = record_ok && vanilla_ok;
    println!(
        "criterion 8: {} — record mean {:.5} ({:+.2} se from {theta}, tol 3) {}; vanilla mean {:.5} ({:+.2} se, needs >= +2) {}",
        verdict(ok),
        record.mean(),
        record_sigma,
        verdict(record_ok),
        vanilla.mean(),
        vanilla_sigma,
        verdict(vanilla_ok)
    );
    assert!(record_ok, "record-method bias {record_sigma:.2} se");
    assert!(
        vanilla_ok,
        "vanilla overshoot not significant: {vanilla_sigma:.2} se"
    );
}

// ---------------------------------------------------------------- 9 ------

#[test]
fn criterion_09_collapse_and_tail_slope() {
    let table = desk_table();
    let slope = table.b_over_a_slope();
    // Known red: the simulated model yields a tail-dependence slope near
    // 1.2, not the published 2.67; see the README's deviations section.
    let slope_ok = (2.4..=2.9).contains(&slope);

    let mut per_group: BTreeMap<i64, BTreeMap<u32, (f64, usize)>> = BTreeMap::new();
    for fit in table
        .fits()
        .iter()
        .filter(|f| f.accepted && [100, 252, 504].contains(&f.n))
    {
        let key = (fit.r0 / fit.n as f64 * 100.0).round() as i64;
        if key <= 0 {
            continue;
        }
        let entry = per_group
            .entry(key)
            .or_default()
            .entry(fit.n)
            .or_insert((0.0, 0));
        entry.0 += fit.a;
        entry.1 += 1;
    }
    let mut worst_spread: f64 = 0.0;
    let mut common = 0;
    for by_n in per_group.values() {
        if by_n.len() < 3 {
            continue;
        }
        common += 1;
        let means: Vec<f64> = by_n.values().map(|(s, c)| s / *c as f64).collect();
        let max = means.iter().cloned().fold(f64::MIN, f64::max);
        let min = means.iter().cloned().fold(f64::MAX, f64::min);
        worst_spread = worst_spread.max((max - min) / min);
    }
    let collapse_ok = common >= 20 && worst_spread <= 0.10;
    let ok = slope_ok && collapse_ok;
    println!(
        "criterion 9: {} — b-on-a slope {slope:.3} (tol [2.4, 2.9]) {}; collapse over {common} shared r-groups, worst spread {:.1}% (tol 10%) {}",
        verdict(ok),
        verdict(slope_ok),
        worst_spread * 100.0,
        verdict(collapse_ok)
    );
    assert!(collapse_ok, "collapse spread {:.1}%", worst_spread * 100.0);
    assert!(slope_ok, "b-on-a slope {slope:.3} outside [2.4, 2.9]");
}

// --------------------------------------------------------------- 10 ------

#[test]
fn criterion_10_rank_crossover_anchor() {
    let table = desk_table();
    // Known red: the simulated model puts this crossover near 2.8, not at
    // the published 5.2; see the README's deviations section.
    let result = table.rank_crossover_nu(40.0, 50.0, 252);
    let (ok, detail) = match &result {
        Ok(nu) => (
            (nu - 5.2).abs() <= 0.5,
            format!("crossover nu {nu:.2} (tol 5.2 +- 0.5)"),
        ),
        Err(e) => (false, format!("crossover failed: {e}")),
    };
    println!("criterion 10: {} — {detail}", verdict(ok));
    assert!(ok, "{detail}");
}

// --------------------------------------------------------------- 11 ------

#[test]
fn criterion_11_relative_efficiency() {
    let table = desk_table();
    let thetas = [0.05, 0.1, 0.2];
    let mut student_min = f64::MAX;
    for nu in [3.0, 4.0] {
        let reports = efficiency_study(
            SliceFamily::Student(nu),
            &[50, 252],
            &thetas,
            6000,
            DESK_PERMUTATIONS,
            11_000_000 + nu as u64,
            table,
        )
        .unwrap();
        for report in &reports {
            assert!(report.usable);
            student_min = student_min.min(report.rho);
            assert!(
                report.rho > 1.0,
                "student nu={nu} n={} theta={}: rho {:.3}",
                report.n,
                report.theta_true,
                report.rho
            );
        }
    }
    let gaussian = efficiency_study(
        SliceFamily::Gaussian,
        &[252],
        &thetas,
        8000,
        DESK_PERMUTATIONS,
        11_900_000,
        table,
    )
    .unwrap();
    let gaussian_max = gaussian.iter().map(|r| r.rho).fold(f64::MIN, f64::max);
    let gaussian_ok = gaussian.iter().all(|r| r.rho <= 1.1);
    let ok = student_min > 1.0 && gaussian_ok;
    println!(
        "criterion 11: {} — student rho min {student_min:.3} (> 1), gaussian rho max {gaussian_max:.3} (<= 1.1)",
        verdict(ok)
    );
    assert!(ok);
}

// --------------------------------------------------------------- 12 ------

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn heterogeneous_panel(nus: &[f64], seed: u64) -> record_sharpe::market::MarketPanel {
    let symbols = 40;
    let days = 280;
    let sigma = 0.02;
    let specs: Vec<(String, IncrementSpec)> = (0..symbols)
        .map(|i| {
            let theta = -0.08 + 0.22 * i as f64 / (symbols - 1) as f64;
            let nu = nus[i % nus.len()];
            (
                format!("S{i:02}"),
                IncrementSpec::student(nu, theta * sigma, sigma).unwrap(),
            )
        })
        .collect();
    synthetic_panel(&specs, days, 80.0, 1e6, date(2020, 1, 1), seed).unwrap()
}

#[test]
fn criterion_12_empirical_layer_properties() {
    let table = desk_table();

    // (a) no look-ahead: truncating the panel leaves earlier output bytes
    // identical
    let panel = heterogeneous_panel(&[4.0, 6.0, 9.0], 12_000);
    let options = RollingOptions::new(
        100,
        EstimateOptions {
            permutations: 300,
            seed: 12_100,
            ..Default::default()
        },
    );
    let full = rolling_estimates(&panel, table, &options).unwrap();
    let cutoff = panel.calendar()[220];
    let truncated_panel = panel.truncated_at(cutoff);
    let truncated = rolling_estimates(&truncated_panel, table, &options).unwrap();
    let full_upto: Vec<&EstimateRow> = full.rows.iter().filter(|r| r.date <= cutoff).collect();
    let truncated_all: Vec<&EstimateRow> = truncated.rows.iter().collect();
    let lookahead_estimates_ok = full_upto == truncated_all;

    let bt_full = threshold_backtest(&panel, &full, BacktestMethod::Record, 0.5).unwrap();
    let bt_trunc =
        threshold_backtest(&truncated_panel, &truncated, BacktestMethod::Record, 0.5).unwrap();
    let full_days: Vec<_> = bt_full.days.iter().filter(|d| d.date <= cutoff).collect();
    let trunc_days: Vec<_> = bt_trunc.days.iter().collect();
    let lookahead_backtest_ok = full_days == trunc_days;

    // (b) exact boundaries for the ranking metrics
    let build = |record: Vec<f64>, vanilla: Vec<f64>| -> RollingEstimates {
        let rows = record
            .iter()
            .zip(&vanilla)
            .enumerate()
            .map(|(i, (r, v))| EstimateRow {
                symbol_idx: i,
                date: date(2023, 6, 1),
                n: 100,
                r0: r * 100.0,
                nu: Some(record_sharpe::estimator::NuEstimate::Student(5.0)),
                theta_record: *r,
                theta_record_annualized: r * 252.0f64.sqrt(),
                theta_vanilla: Some(*v),
                theta_vanilla_annualized: Some(v * 252.0f64.sqrt()),
                diagnostics: vec![],
            })
            .collect();
        RollingEstimates { rows, window: 100 }
    };
    let scores = vec![-2.0, -1.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
    let identical = &ranking_divergence(&build(scores.clone(), scores.clone()), 0.2).unwrap()[0];
    let reversed_scores: Vec<f64> = scores.iter().rev().cloned().collect();
    let reversed = &ranking_divergence(&build(scores.clone(), reversed_scores), 0.2).unwrap()[0];
    let boundaries_ok = identical.top_overlap == 1.0
        && identical.bottom_overlap == 1.0
        && identical.spearman_positive == Some(1.0)
        && identical.kendall_positive == Some(1.0)
        && identical.blest == Some(1.0)
        && reversed.top_overlap == 0.0
        && reversed.spearman_positive == Some(-1.0)
        && reversed.kendall_positive == Some(-1.0)
        && reversed.blest == Some(-1.0);

    // (c) heterogeneous tail indices divide the rankings, more so as the
    // dispersion widens
    let mean_top_overlap = |nus: &[f64], seed: u64| -> f64 {
        let panel = heterogeneous_panel(nus, seed);
        let options = RollingOptions::new(
            100,
            EstimateOptions {
                permutations: 300,
                seed: seed + 7,
                ..Default::default()
            },
        );
        let rolling = rolling_estimates(&panel, table, &options).unwrap();
        let reports = ranking_divergence(&rolling, 0.05).unwrap();
        let sum: f64 = reports.iter().map(|r| r.top_overlap).sum();
        sum / reports.len() as f64
    };
    let narrow = mean_top_overlap(&[7.0, 8.0, 9.0, 10.0], 12_300);
    let wide = mean_top_overlap(&[2.6, 3.0, 3.6, 4.5, 7.0, 10.0], 12_300);
    let heterogeneity_ok = narrow < 1.0 && wide < 1.0 && wide < narrow;

    // (d) backtest accounting identity
    let mut accounting_ok = true;
    for method in [BacktestMethod::Record, BacktestMethod::Vanilla] {
        let result = threshold_backtest(&panel, &full, method, 0.5).unwrap();
        let sum: f64 = result
            .days
            .iter()
            .map(|d| (1.0 + d.aggregate_return).ln())
            .sum();
        if (sum - result.final_log_wealth()).abs() > 1e-12 {
            accounting_ok = false;
        }
        if result
            .days
            .iter()
            .any(|d| d.positions == 0 && d.aggregate_return != 0.0)
        {
            accounting_ok = false;
        }
    }

    let ok = lookahead_estimates_ok
        && lookahead_backtest_ok
        && boundaries_ok
        && heterogeneity_ok
        && accounting_ok;
    println!(
        "criterion 12: {} — no-look-ahead {} / {}, ranking boundaries {}, overlap narrow {narrow:.3} vs wide {wide:.3} (both < 1, wide < narrow) {}, backtest accounting {}",
        verdict(ok),
        verdict(lookahead_estimates_ok),
        verdict(lookahead_backtest_ok),
        verdict(boundaries_ok),
        verdict(heterogeneity_ok),
        verdict(accounting_ok)
    );
    assert!(ok);
}

// ------------------------------------------------------- supplementary ---

#[test]
fn supplementary_methods_agree_at_scale() {
    // Estimator invariant (not one of the numbered criteria): with the
    // full-scale table, the simplified curve tracks the table inversion
    // within 10% for moderate record levels on Gaussian batches.
    let table = desk_table();
    let spec = IncrementSpec::gaussian(0.1, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..60u64 {
        let series = generate_series(&spec, 252, 13_000_000 + i).unwrap();
        let base = EstimateOptions {
            permutations: 500,
            seed: 13_500_000 + i,
            ..Default::default()
        };
        let tab = estimate_sharpe(
            &series,
            table,
            &EstimateOptions {
                method: Method::TableInverse,
                ..base.clone()
            },
        )
        .unwrap();
        if !matches!(tab.nu, record_sharpe::estimator::NuEstimate::Gaussian) {
            continue;
        }
        if tab.theta.abs() < 0.02 || tab.theta.abs() > 0.3 {
            continue;
        }
        let simp = estimate_sharpe(
            &series,
            table,
            &EstimateOptions {
                method: Method::Simplified,
                ..base
            },
        )
        .unwrap();
        checked += 1;
        worst = worst.max((tab.theta - simp.theta).abs() / tab.theta.abs());
    }
    println!(
        "supplementary: methods agree within {:.1}% over {checked} gaussian replicas (tol 10%)",
        worst * 100.0
    );
    assert!(checked >= 20);
    assert!(worst <= 0.10, "worst disagreement {:.1}%", worst * 100.0);
}

#[test]
fn supplementary_fit_filter_rejects_weak_regions() {
    // Rejections concentrate where the drift is a negligible fraction of the
    // noise: long series with small record levels.
    let table = desk_table();
    let rejected: Vec<_> = table.fits().iter().filter(|f| !f.accepted).collect();
    assert!(
        !rejected.is_empty(),
        "the filter never fired on the full-scale table"
    );
    let weak = rejected
        .iter()
        .filter(|f| f.n >= 100 && f.r0 / f.n as f64 <= 0.06)
        .count();
    println!(
        "supplementary: {} rejected fits, {weak} of them at n >= 100 and r0/n <= 0.06",
        rejected.len()
    );
    assert!(
        weak * 2 >= rejected.len(),
        "rejections not concentrated in the weak region: {weak} of {}",
        rejected.len()
    );
}

#[test]
fn supplementary_held_out_known_nu_inversion() {
    // Calibration-level held-out check: inverting with the true tail index
    // recovers the drift without the tail-fit noise.
    let table = desk_table();
    let theta = 0.05;
    let spec = IncrementSpec::student(4.0, theta, 1.0).unwrap();
    let estimates: Vec<f64> = (0..4000u64)
        .into_par_iter()
        .map(|i| {
            let series = generate_series(&spec, 252, 14_000_000 + i).unwrap();
            let summary = r0_statistic(&series, DESK_PERMUTATIONS, 14_500_000 + i).unwrap();
            table
                .invert_r0(summary.r0.unwrap(), 252, NuQuery::Student(4.0))
                .unwrap()
                .theta
        })
        .collect();
    let tracker = MomentTracker::from(estimates.iter().copied());
    let sigma = (tracker.mean() - theta) / tracker.stderr();
    println!(
        "supplementary: known-nu inversion mean {:.5} ({:+.2} se from {theta})",
        tracker.mean(),
        sigma
    );
    assert!(sigma.abs() <= 3.0);
}

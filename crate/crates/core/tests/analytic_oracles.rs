//! Independent oracles for the analytic reference quantities: a
//! generating-function expansion for the driftless record law and
//! characteristic-function quadrature for the Student-t convolution density.
//! These deliberately avoid the code paths they check.

use record_sharpe::analytic::{
    driftless_record_pmf, expected_records_from_survival, student3_convolution_density_at_zero,
    survival_from_sign_probabilities,
};

/// Coefficients of (1 - z)^(-1/2) to order `n_max`.
fn persistence_series(n_max: usize) -> Vec<f64> {
    let mut q = vec![1.0];
    for k in 1..=n_max {
        let prev = q[k - 1];
        q.push(prev * (2.0 * k as f64 - 1.0) / (2.0 * k as f64));
    }
    q
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut out = vec![0.0; n];
    for i in 0..n {
        for k in 0..=i {
            out[i] += a[k] * b[i - k];
        }
    }
    out
}

/// `P(R, n)` for all `R` via the record-number generating function
/// `Q(z) * [1 - (1 - z) Q(z)]^(R-1)` with `Q = (1 - z)^(-1/2)`.
fn pmf_from_generating_function(n: usize) -> Vec<f64> {
    let q = persistence_series(n + 1);
    // w = 1 - (1 - z) Q(z)
    let mut w = vec![0.0; n + 1];
    for k in 0..=n {
        let u = if k == 0 { q[0] } else { q[k] - q[k - 1] };
        w[k] = if k == 0 { 1.0 - u } else { -u };
    }
    let mut power = vec![0.0; n + 1]; // w^(R-1), starting at R = 1
    power[0] = 1.0;
    let mut pmf = Vec::with_capacity(n + 1);
    for _ in 1..=(n + 1) {
        let coeffs = series_mul(&q, &power);
        pmf.push(coeffs[n]);
        power = series_mul(&power, &w);
    }
    pmf
}

#[test]
fn record_law_matches_generating_function_oracle() {
    for n in 1..=12 {
        let law = driftless_record_pmf(n).unwrap();
        let oracle = pmf_from_generating_function(n);
        for (r, expected) in oracle.iter().enumerate() {
            let got = law.pmf(r + 1);
            assert!(
                (got - expected).abs() < 1e-12,
                "n = {n}, R = {}: law {got} vs oracle {expected}",
                r + 1
            );
        }
    }
}

#[test]
fn record_law_mean_matches_survival_pipeline() {
    // E(R) from the pmf must agree with the expected-records pipeline fed
    // with the exact driftless sign probabilities.
    let m =
        expected_records_from_survival(&survival_from_sign_probabilities(&vec![0.5; 40]).unwrap())
            .unwrap();
    for n in 1..=40 {
        let law = driftless_record_pmf(n).unwrap();
        assert!(
            (law.mean() - m[n]).abs() < 1e-10,
            "n = {n}: pmf mean {} vs pipeline {}",
            law.mean(),
            m[n]
        );
    }
}

/// Characteristic-function quadrature: the variance-1 Student-t (nu = 3) has
/// characteristic function `(1 + |t|) exp(-|t|)`, so the n-fold convolution
/// density at zero is `(1/pi) * integral_0^inf (1 + u)^n exp(-n u) du`.
fn density_by_quadrature(n: usize) -> f64 {
    let upper = 80.0;
    let panels = 1 << 21;
    let h = upper / panels as f64;
    let f = |u: f64| (1.0 + u).powi(n as i32) * (-(n as f64) * u).exp();
    let mut total = f(0.0) + f(upper);
    for k in 1..panels {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        total += weight * f(k as f64 * h);
    }
    total * h / 3.0 / std::f64::consts::PI
}

#[test]
fn convolution_density_matches_quadrature_oracle() {
    for n in 1..=20 {
        let exact = student3_convolution_density_at_zero(n, 1.0).unwrap();
        let oracle = density_by_quadrature(n);
        assert!(
            (exact - oracle).abs() < 1e-6,
            "n = {n}: closed form {exact} vs quadrature {oracle}"
        );
    }
}

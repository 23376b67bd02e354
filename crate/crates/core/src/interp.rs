//! Shape-preserving monotone cubic interpolation (Fritsch-Carlson PCHIP)
//! with an analytic derivative. Monotone data yields a monotone interpolant
//! with no overshoot, which keeps calibrated maps invertible.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>, // node slopes
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid(
                "interpolant needs matching x/y with >= 2 points",
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("interpolant knots must be finite"));
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "interpolant x knots must be strictly increasing",
            ));
        }

        let mut h = Vec::with_capacity(n - 1);
        let mut delta = Vec::with_capacity(n - 1);
        for (xw, yw) in x.windows(2).zip(y.windows(2)) {
            h.push(xw[1] - xw[0]);
            delta.push((yw[1] - yw[0]) / (xw[1] - xw[0]));
        }

        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let s1 = delta[k - 1];
            let s2 = delta[k];
            if s1 == 0.0 || s2 == 0.0 || s1.signum() != s2.signum() {
                d[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
            }
        }
        d[0] = endpoint_slope(h[0], delta[0], h.get(1).copied(), delta.get(1).copied());
        d[n - 1] = endpoint_slope(
            h[n - 2],
            delta[n - 2],
            if n >= 3 { Some(h[n - 3]) } else { None },
            if n >= 3 { Some(delta[n - 3]) } else { None },
        );

        Ok(MonotoneCubic { x, y, d })
    }

    pub fn min_x(&self) -> f64 {
        self.x[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn min_y(&self) -> f64 {
        self.y[0]
    }

    pub fn max_y(&self) -> f64 {
        *self.y.last().unwrap()
    }

    pub fn is_out_of_range(&self, xq: f64) -> bool {
        xq < self.min_x() || xq > self.max_x()
    }

    fn segment(&self, xq: f64) -> usize {
        let n = self.x.len();
        if xq <= self.x[0] {
            0
        } else if xq >= self.x[n - 1] {
            n - 2
        } else {
            self.x.partition_point(|&xi| xi <= xq).saturating_sub(1)
        }
    }

    /// Evaluate at `xq`, clamped to the knot range.
    pub fn eval(&self, xq: f64) -> f64 {
        let xq = xq.clamp(self.min_x(), self.max_x());
        let k = self.segment(xq);
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }

    /// Analytic first derivative at `xq` (clamped to the knot range).
    pub fn derivative(&self, xq: f64) -> f64 {
        let xq = xq.clamp(self.min_x(), self.max_x());
        let k = self.segment(xq);
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let t2 = t * t;
        let dh00 = (6.0 * t2 - 6.0 * t) / h;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = (-6.0 * t2 + 6.0 * t) / h;
        let dh11 = 3.0 * t2 - 2.0 * t;
        dh00 * self.y[k] + dh10 * self.d[k] + dh01 * self.y[k + 1] + dh11 * self.d[k + 1]
    }
}

fn endpoint_slope(h0: f64, s0: f64, h1: Option<f64>, s1: Option<f64>) -> f64 {
    match (h1, s1) {
        (Some(h1), Some(s1)) => {
            let mut d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if d.signum() != s0.signum() {
                d = 0.0;
            } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
                d = 3.0 * s0;
            }
            d
        }
        _ => s0,
    }
}

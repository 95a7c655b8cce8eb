//! Monotone piecewise cubic Hermite interpolation (Fritsch-Carlson).
//!
//! On every data interval the interpolant is monotone, so it never leaves the
//! range spanned by the two interval endpoints.

use crate::error::{PmeError, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if y.len() != n {
            return Err(PmeError::LengthMismatch { expected: n, got: y.len() });
        }
        if n < 2 {
            return Err(PmeError::InvalidParameter("interpolation needs at least two points".into()));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(PmeError::NotAdmissible { node: i + 1 });
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = y.windows(2).zip(&h).map(|(w, hk)| (w[1] - w[0]) / hk).collect();

        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            let (dl, dr) = (delta[k - 1], delta[k]);
            d[k] = if dl * dr <= 0.0 {
                0.0
            } else {
                (h[k] * dl + h[k - 1] * dr) / (h[k - 1] + h[k])
            };
        }
        for k in 0..n - 1 {
            if delta[k] == 0.0 {
                d[k] = 0.0;
                d[k + 1] = 0.0;
                continue;
            }
            let a = d[k] / delta[k];
            let b = d[k + 1] / delta[k];
            // an endpoint slope of the wrong sign would break monotonicity
            if a < 0.0 {
                d[k] = 0.0;
            }
            if b < 0.0 {
                d[k + 1] = 0.0;
            }
            let (a, b) = (d[k] / delta[k], d[k + 1] / delta[k]);
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                d[k] = t * a * delta[k];
                d[k + 1] = t * b * delta[k];
            }
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|v| *v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = ((t - self.x[k]) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

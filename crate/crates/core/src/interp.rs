//! Monotone cubic (Fritsch-Carlson) interpolation. Used for comparing
//! profiles that live on different grids and for table-defined coefficients.

use crate::error::{Error, Result};

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes; does not
/// overshoot the data, so monotone data yields a monotone interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Invalid("pchip needs at least two matching samples".into()));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Invalid("pchip abscissae must be strictly increasing".into()));
            }
        }

        let mut h = vec![0.0; n - 1];
        let mut slope = vec![0.0; n - 1];
        for i in 0..n - 1 {
            h[i] = xs[i + 1] - xs[i];
            slope[i] = (ys[i + 1] - ys[i]) / h[i];
        }

        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = slope[0];
            ds[1] = slope[0];
        } else {
            // Interior: weighted harmonic mean when adjacent slopes agree in sign.
            for i in 1..n - 1 {
                if slope[i - 1] * slope[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
                }
            }
            ds[0] = endpoint_slope(h[0], h[1], slope[0], slope[1]);
            ds[n - 1] = endpoint_slope(h[n - 2], h[n - 3], slope[n - 2], slope[n - 3]);
        }

        Ok(Pchip { xs, ys, ds })
    }

    /// Evaluate at `x`; clamps to the data range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }
}

fn endpoint_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    // One-sided three-point estimate, limited to preserve shape.
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 < 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_nodes_exactly() {
        let xs = vec![0.0, 1.0, 2.5, 4.0];
        let ys = vec![1.0, 0.5, 0.2, 0.1];
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert_eq!(p.eval(*x), *y);
        }
    }

    #[test]
    fn preserves_monotonicity() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x)).collect();
        let p = Pchip::new(xs, ys).unwrap();
        let mut prev = p.eval(0.0);
        let mut x = 0.05;
        while x < 19.0 {
            let y = p.eval(x);
            assert!(y <= prev + 1e-14, "not monotone at {x}");
            prev = y;
            x += 0.05;
        }
    }

    #[test]
    fn rejects_unsorted() {
        assert!(Pchip::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}

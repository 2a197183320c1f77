//! Tridiagonal systems: storage, matrix-vector product, and the Thomas solve.

use crate::error::{Error, Result};

/// Tridiagonal matrix with `n` rows: `sub` has length n-1 (entry i couples
/// row i+1 to column i), `diag` length n, `sup` length n-1.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Solve A x = rhs by LU without pivoting (Thomas algorithm).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if rhs.len() != n {
            return Err(Error::Invalid(format!(
                "rhs length {} does not match system size {}",
                rhs.len(),
                n
            )));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c_prime = vec![0.0; n.saturating_sub(1)];
        let mut d_prime = vec![0.0; n];

        let mut denom = self.diag[0];
        if !denom.is_finite() || denom.abs() < 1e-300 {
            return Err(Error::Quadrature("tridiagonal pivot breakdown at row 0".into()));
        }
        if n > 1 {
            c_prime[0] = self.sup[0] / denom;
        }
        d_prime[0] = rhs[0] / denom;

        for i in 1..n {
            denom = self.diag[i] - self.sub[i - 1] * if i - 1 < c_prime.len() { c_prime[i - 1] } else { 0.0 };
            if !denom.is_finite() || denom.abs() < 1e-300 {
                return Err(Error::Quadrature(format!("tridiagonal pivot breakdown at row {i}")));
            }
            if i < n - 1 {
                c_prime[i] = self.sup[i] / denom;
            }
            d_prime[i] = (rhs[i] - self.sub[i - 1] * d_prime[i - 1]) / denom;
        }

        let mut x = vec![0.0; n];
        x[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Add `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> Tridiag {
        let mut t = self.clone();
        for d in &mut t.diag {
            *d += shift;
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_roundtrip() {
        let n = 64;
        let mut a = Tridiag::zeros(n);
        for i in 0..n {
            a.diag[i] = 4.0 + (i as f64) * 0.01;
        }
        for i in 0..n - 1 {
            a.sub[i] = -1.0 + 0.001 * i as f64;
            a.sup[i] = -1.3;
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.apply(&x_true);
        let x = a.solve(&b).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12, "mismatch at {i}");
        }
    }

    #[test]
    fn identity_row_preserved_bitwise() {
        // Last row [0 .. 0 1] with rhs g must return exactly g.
        let n = 10;
        let mut a = Tridiag::zeros(n);
        for i in 0..n {
            a.diag[i] = 2.0;
        }
        for i in 0..n - 1 {
            a.sub[i] = -1.0;
            a.sup[i] = -1.0;
        }
        a.diag[n - 1] = 1.0;
        a.sub[n - 2] = 0.0;
        let g = 0.123456789123456789;
        let mut rhs = vec![1.0; n];
        rhs[n - 1] = g;
        let x = a.solve(&rhs).unwrap();
        assert_eq!(x[n - 1], g);
    }

    #[test]
    fn singular_system_errors() {
        let mut a = Tridiag::zeros(3);
        a.diag = vec![1.0, 0.0, 1.0];
        let res = a.solve(&[1.0, 1.0, 1.0]);
        assert!(res.is_err());
    }
}

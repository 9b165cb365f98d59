//! Tridiagonal matrices stored by diagonals, with a Thomas solver.

use crate::error::{Error, Result};

/// `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// `out = alpha * self * x + beta * x`.
    pub fn apply_into(&self, x: &[f64], alpha: f64, beta: f64, out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            out[i] = alpha * s + beta * x[i];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, 1.0, 0.0, &mut out);
        out
    }

    /// Solves `(I - c * self) x = rhs` in place, using `scratch` of length n.
    pub fn solve_shifted(&self, c: f64, rhs: &mut [f64], scratch: &mut [f64]) -> Result<()> {
        let n = self.len();
        let a = |i: usize| -c * self.lower[i];
        let b = |i: usize| 1.0 - c * self.diag[i];
        let u = |i: usize| -c * self.upper[i];

        let mut denom = b(0);
        if denom == 0.0 {
            return Err(Error::SingularSystem(0));
        }
        scratch[0] = u(0) / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = b(i) - a(i) * scratch[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::SingularSystem(i));
            }
            scratch[i] = if i + 1 < n { u(i) / denom } else { 0.0 };
            rhs[i] = (rhs[i] - a(i) * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
        Ok(())
    }
}

//! Symmetric tridiagonal linear algebra: Thomas solves, Sturm counts and
//! eigenpairs by bisection plus inverse iteration.

use crate::error::{DnkgError, Result};

/// Solves a tridiagonal system in place. `sub[0]` and `sup[n-1]` are ignored.
pub fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Symmetric tridiagonal matrix with diagonal `a` and off-diagonal `b`
/// (`b[i]` couples rows `i` and `i+1`).
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SymTridiag {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(b.len() + 1, a.len());
        Self { a, b }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.a[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.a.len() {
            let denom = if q == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { q };
            q = self.a[i] - x - self.b[i - 1] * self.b[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.a.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.b[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.b[i].abs() } else { 0.0 };
            lo = lo.min(self.a[i] - r);
            hi = hi.max(self.a[i] + r);
        }
        (lo, hi)
    }

    /// The k-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.a.len();
        (0..n)
            .map(|i| {
                let mut s = self.a[i] * x[i];
                if i > 0 {
                    s += self.b[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.b[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Eigenvector for an eigenvalue estimate `lambda` by shifted inverse
    /// iteration; returns the Rayleigh quotient and unit-norm vector.
    pub fn eigenvector(&self, lambda: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
        let n = self.a.len();
        let scale = 1.0 + lambda.abs();
        let shift = lambda - 1e-10 * scale;
        let diag: Vec<f64> = self.a.iter().map(|v| v - shift).collect();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        sub[1..n].copy_from_slice(&self.b[..(n - 1)]);
        sup[..(n - 1)].copy_from_slice(&self.b[..(n - 1)]);
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut rq = lambda;
        for it in 0..max_iter {
            let mut y = x.clone();
            thomas_solve(&sub, &diag, &sup, &mut y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(DnkgError::NonConvergence(
                    "inverse iteration produced a non-finite iterate".into(),
                ));
            }
            for v in y.iter_mut() {
                *v /= norm;
            }
            let ay = self.apply(&y);
            let new_rq: f64 = ay.iter().zip(&y).map(|(a, b)| a * b).sum();
            let resid = ay
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - new_rq * b).powi(2))
                .sum::<f64>()
                .sqrt();
            x = y;
            let done = (new_rq - rq).abs() <= 1e-14 * scale && resid < 1e-9 * scale;
            rq = new_rq;
            if done || (it > 2 && resid < 1e-12 * scale) {
                return Ok((rq, x));
            }
        }
        Err(DnkgError::NonConvergence(format!(
            "inverse iteration did not converge in {max_iter} iterations"
        )))
    }
}

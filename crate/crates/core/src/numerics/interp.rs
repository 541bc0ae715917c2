//! Interpolation on tabulated data.

use serde::{Deserialize, Serialize};

/// Cubic Hermite interpolation of `(y, y')` at `x` in `[x0, x0 + h]`.
/// Returns the interpolated value and derivative.
#[inline]
pub fn hermite(x0: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64, x: f64) -> (f64, f64) {
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let deriv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (value, deriv)
}

/// Natural cubic spline through `(x_i, y_i)` with strictly increasing `x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n);
        let mut m = vec![0.0; n];
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        super::tridiag::thomas_solve(&sub, &diag, &sup, &mut rhs);
        m.copy_from_slice(&rhs);
        m[0] = 0.0;
        m[n - 1] = 0.0;
        Self { x, y, m }
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and derivative (linear extrapolation outside the knots is the caller's concern).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let value = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0;
        let deriv = (self.y[i + 1] - self.y[i]) / h
            + (-(3.0 * a * a - 1.0) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0;
        (value, deriv)
    }
}

/// Lagrange interpolation of uniformly spaced samples `values[j] = f(x0 + j h)`
/// using a centered stencil of `2 * half` points. Returns value and derivative.
/// Points outside the table use the nearest in-range stencil.
pub fn lagrange_uniform(values: &[f64], x0: f64, h: f64, half: usize, x: f64) -> (f64, f64) {
    let n = values.len();
    let width = 2 * half;
    assert!(n >= width);
    let s = (x - x0) / h;
    let base = s.floor() as isize - half as isize + 1;
    let base = base.clamp(0, (n - width) as isize) as usize;
    let mut value = 0.0;
    let mut deriv = 0.0;
    for j in 0..width {
        let sj = (base + j) as f64;
        let mut lj = 1.0;
        let mut dlj = 0.0;
        for m in 0..width {
            if m == j {
                continue;
            }
            let sm = (base + m) as f64;
            let denom = sj - sm;
            // product rule for the derivative
            dlj = dlj * (s - sm) / denom + lj / denom;
            lj *= (s - sm) / denom;
        }
        value += values[base + j] * lj;
        deriv += values[base + j] * dlj;
    }
    (value, deriv / h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let df = |x: f64| 6.0 * x * x - 1.0;
        let (v, d) = hermite(1.0, 0.5, f(1.0), df(1.0), f(1.5), df(1.5), 1.3);
        assert!((v - f(1.3)).abs() < 1e-14);
        assert!((d - df(1.3)).abs() < 1e-13);
    }

    #[test]
    fn spline_matches_smooth_function() {
        let x: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::natural(x, y);
        let (v, d) = s.eval(2.537);
        assert!((v - 2.537f64.sin()).abs() < 1e-6);
        assert!((d - 2.537f64.cos()).abs() < 1e-5);
    }

    #[test]
    fn lagrange_six_point_is_exact_for_quintics() {
        let f = |x: f64| x.powi(5) - 3.0 * x.powi(2) + 1.0;
        let df = |x: f64| 5.0 * x.powi(4) - 6.0 * x;
        let vals: Vec<f64> = (0..20).map(|j| f(-1.0 + 0.1 * j as f64)).collect();
        let (v, d) = lagrange_uniform(&vals, -1.0, 0.1, 3, 0.333);
        assert!((v - f(0.333)).abs() < 1e-12);
        assert!((d - df(0.333)).abs() < 1e-10);
    }
}

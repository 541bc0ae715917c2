//! Least-squares helpers.

use nalgebra::{DMatrix, DVector};

/// Solves `min ‖A c − y‖` for the coefficients `c`, where row `i` of `A` is
/// `basis(x_i)`. Returns coefficients and the RMS residual.
pub fn linear_least_squares<B>(xs: &[f64], ys: &[f64], nbasis: usize, basis: B) -> Option<(Vec<f64>, f64)>
where
    B: Fn(f64) -> Vec<f64>,
{
    let m = xs.len();
    if m < nbasis || m != ys.len() {
        return None;
    }
    let a = DMatrix::from_fn(m, nbasis, |i, j| basis(xs[i])[j]);
    let y = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&y, 1e-14).ok()?;
    let r = &a * &c - &y;
    let rms = (r.norm_squared() / m as f64).sqrt();
    Some((c.iter().copied().collect(), rms))
}

/// Straight-line fit `y ≈ a + b x`; returns `(a, b)`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Slope of `log y` against `log x` over the points with positive data.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    line_fit(&lx, &ly).map(|(_, b)| b)
}

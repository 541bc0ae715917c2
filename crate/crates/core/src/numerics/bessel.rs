//! Exponentially scaled modified Bessel functions `e^r K_ν(r)` for the
//! integer and half-integer orders that appear in radial tails.

use std::f64::consts::PI;

use super::interp::lagrange_uniform;

/// `e^r K_ν(r)` for `ν` an integer or half-integer and `r > 0`.
pub fn k_scaled(nu: f64, r: f64) -> f64 {
    assert!(r > 0.0, "k_scaled needs r > 0");
    let nu = nu.abs();
    let two_nu = 2.0 * nu;
    let half_integer = (two_nu - two_nu.round()).abs() < 1e-12 && (two_nu.round() as i64) % 2 == 1;
    if half_integer || r >= 15.0 {
        asymptotic_series(nu, r, half_integer)
    } else {
        integral_representation(nu, r)
    }
}

/// Hankel expansion; terminates exactly for half-integer orders, otherwise
/// truncated at the smallest term.
fn asymptotic_series(nu: f64, r: f64, exact: bool) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * r);
        if term == 0.0 {
            break;
        }
        if !exact && term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if !exact && term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * r)).sqrt() * sum
}

/// `e^r K_ν(r) = ∫_0^∞ e^{-r (cosh t - 1)} cosh(ν t) dt`, trapezoidal rule.
/// The integrand is entire and decays doubly exponentially, so the error
/// behaves like `exp(-π²/h)` and a coarse step already reaches round-off.
fn integral_representation(nu: f64, r: f64) -> f64 {
    let t_end = (1.0 + 50.0 / r).acosh() + 1.0;
    let h = 0.1f64.min(t_end / 40.0);
    let n = (t_end / h).ceil() as usize;
    let mut s = 0.5;
    for i in 1..=n {
        let t = i as f64 * h;
        s += (-r * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    }
    s * h
}

/// Normalized decaying solution of the radial linear equation
/// `w'' + (d-1)/r w' - w = 0`, scaled so that `w(r) r^{(d-1)/2} e^r → 1`.
/// Returns `(w, w')`.
pub fn radial_tail_shape(d: usize, r: f64) -> (f64, f64) {
    let nu = (d as f64 - 2.0) / 2.0;
    let c = (2.0 / PI).sqrt();
    let e = (-r).exp();
    let rn = r.powf(-nu);
    let w = c * rn * k_scaled(nu, r) * e;
    let dw = -c * rn * k_scaled(nu + 1.0, r) * e;
    (w, dw)
}

/// Tabulated [`radial_tail_shape`] for even dimensions, where the Bessel
/// order is an integer and each direct evaluation needs a quadrature.
#[derive(Debug, Clone)]
pub struct TailShape {
    d: usize,
    r0: f64,
    h: f64,
    k_nu: Vec<f64>,
    k_nu1: Vec<f64>,
}

const TABLE_END: f64 = 15.0;
const TABLE_STEP: f64 = 0.02;

impl TailShape {
    /// Table covering `[r_lo, 15]`; odd dimensions keep an empty table.
    pub fn new(d: usize, r_lo: f64) -> Self {
        let nu = (d as f64 - 2.0) / 2.0;
        let r0 = (r_lo - 4.0 * TABLE_STEP).max(0.05);
        let (k_nu, k_nu1) = if d % 2 == 0 && r0 < TABLE_END {
            let n = ((TABLE_END - r0) / TABLE_STEP).ceil() as usize + 5;
            (0..n)
                .map(|i| {
                    let r = r0 + i as f64 * TABLE_STEP;
                    (k_scaled(nu, r), k_scaled(nu + 1.0, r))
                })
                .unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            d,
            r0,
            h: TABLE_STEP,
            k_nu,
            k_nu1,
        }
    }

    /// Same value as [`radial_tail_shape`].
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if self.k_nu.is_empty() || r < self.r0 || r >= TABLE_END {
            return radial_tail_shape(self.d, r);
        }
        let nu = (self.d as f64 - 2.0) / 2.0;
        let c = (2.0 / PI).sqrt() * r.powf(-nu) * (-r).exp();
        let k0 = lagrange_uniform(&self.k_nu, self.r0, self.h, 4, r).0;
        let k1 = lagrange_uniform(&self.k_nu1, self.r0, self.h, 4, r).0;
        (c * k0, -c * k1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_tail_matches_direct() {
        for d in [2, 3, 4] {
            let t = TailShape::new(d, 6.3);
            for r in [6.3, 7.77, 10.01, 14.99, 15.0, 22.0] {
                let (w, dw) = t.eval(r);
                let (we, dwe) = radial_tail_shape(d, r);
                assert!((w - we).abs() < 1e-13 * we, "d = {d}, r = {r}");
                assert!((dw - dwe).abs() < 1e-13 * dwe.abs(), "d = {d}, r = {r}");
            }
        }
    }

    #[test]
    fn half_integer_orders_are_closed_form() {
        let r = 3.7;
        let k12 = (PI / (2.0 * r)).sqrt();
        assert!((k_scaled(0.5, r) - k12).abs() < 1e-15);
        assert!((k_scaled(1.5, r) - k12 * (1.0 + 1.0 / r)).abs() < 1e-14);
    }

    #[test]
    fn integer_orders_agree_across_methods() {
        for nu in [0.0, 1.0, 2.0] {
            let a = integral_representation(nu, 15.0);
            let b = asymptotic_series(nu, 15.0, false);
            assert!((a - b).abs() < 1e-12 * a, "nu = {nu}: {a} vs {b}");
        }
        // K_0(1) e^1 = 1.144463079806895
        assert!((k_scaled(0.0, 1.0) - 1.144_463_079_806_895).abs() < 1e-12);
        // recurrence K_2 = K_0 + 2 K_1 / r
        let r = 4.2;
        let lhs = k_scaled(2.0, r);
        let rhs = k_scaled(0.0, r) + 2.0 / r * k_scaled(1.0, r);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tail_shape_solves_radial_equation() {
        for d in 1..=5 {
            let r = 9.0;
            let h = 1e-3;
            let (w, dw) = radial_tail_shape(d, r);
            let (_, dwp) = radial_tail_shape(d, r + h);
            let (_, dwm) = radial_tail_shape(d, r - h);
            let d2w = (dwp - dwm) / (2.0 * h);
            let res = d2w + (d as f64 - 1.0) / r * dw - w;
            assert!(res.abs() < 1e-6 * w, "d = {d}: residual {res}");
            let big = radial_tail_shape(d, 200.0).0 * 200f64.powf((d as f64 - 1.0) / 2.0) * 200f64.exp();
            assert!((big - 1.0).abs() < 0.01, "d = {d}: normalization {big}");
        }
        let (w, dw) = radial_tail_shape(1, 2.0);
        assert!((w - (-2.0f64).exp()).abs() < 1e-16);
        assert!((dw + (-2.0f64).exp()).abs() < 1e-16);
    }
}

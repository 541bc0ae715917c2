//! Soliton–soliton interaction: the radial kernel `g`, the normalized force
//! `𝓕 = g / (2α‖∂₁Q‖²)`, the constants `c_g`, `c_⋆` and the time scale
//! `G(r) = ∫_1^r ds / 𝓕(s)`.

use serde::{Deserialize, Serialize};

use crate::error::{DnkgError, Result};
use crate::ground_state::{ground_state_constants, GroundStateConstants, RadialProfile};
use crate::numerics::fit::linear_least_squares;
use crate::numerics::interp::lagrange_uniform;
use crate::numerics::quadrature::GaussLegendre;
use crate::params::{sphere_area, ModelParameters};

pub const KERNEL_SCHEMA_VERSION: u32 = 1;

/// Table layout of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub r_min: f64,
    pub r_tab: f64,
    pub step: f64,
    /// Window used for the tail fit of `g r^{(d-1)/2} e^r`.
    pub tail_window: (f64, f64),
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            r_min: 1.0,
            r_tab: 40.0,
            step: 0.25,
            tail_window: (20.0, 40.0),
        }
    }
}

/// Value of `g(r)` with the underflow flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub g: f64,
    pub underflow: bool,
}

/// Tabulated interaction kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionKernel {
    pub schema_version: u32,
    pub params: ModelParameters,
    pub constants: GroundStateConstants,
    pub c_g: f64,
    /// `lim g(r) r^{(d-1)/2} e^r / c_q` from the tabulated values.
    pub c_g_tail: f64,
    pub c_star: f64,
    /// Tail constant of the force itself, `𝓕(r) r^{(d-1)/2} e^r → kappa = c_q c_⋆`.
    pub kappa: f64,
    pub alpha: f64,
    pub options: KernelOptions,
    pub g_table: Vec<(f64, f64)>,
    table_start: f64,
    /// Continuation beyond the table: `ln g = a - r - m ln r - beta / r`.
    tail_a: f64,
    tail_beta: f64,
    ln_g_table: Vec<f64>,
    /// `G` at `r_min + k * step`, extended past the table.
    g_cumulative: Vec<f64>,
    pub underflow: bool,
}

/// Quadrature layout for integrals of two translated profiles.
struct Layout {
    x1: Vec<(f64, f64)>,
    rho: Vec<(f64, f64)>,
}

/// Graded breakpoints from `center` outwards to `center + extent`, panel
/// widths growing geometrically from `w0` to at most 1.
fn graded(center: f64, extent: f64, w0: f64) -> Vec<f64> {
    let mut pts = vec![center];
    let mut x = center;
    let mut w = w0;
    let dir = extent.signum();
    let end = center + extent;
    loop {
        let remaining = (end - x).abs();
        if remaining < 1e-9 {
            break;
        }
        // avoid a sliver panel at the end
        x = if remaining < 1.5 * w { end } else { x + dir * w };
        pts.push(x);
        w = (w * 1.3).min(1.0);
    }
    pts
}

fn panels_to_points(mut breaks: Vec<f64>, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        out.extend(rule.composite_points(w[0], w[1], 1));
    }
    out
}

impl Layout {
    /// Covers `x1 ∈ [a, b]`, `ρ ∈ [0, rho_max]`, graded near each of `centers`.
    fn new(profile: &RadialProfile, a: f64, b: f64, rho_max: f64, centers: &[f64]) -> Self {
        let d = profile.params.d;
        let p = profile.params.p;
        let w0 = (1.0 / profile.q0.powf(0.5 * (p - 1.0))).min(0.5);
        let mut breaks = vec![a, b];
        for &c in centers {
            if c > a && c < b {
                breaks.extend(graded(c, b - c, w0));
                breaks.extend(graded(c, a - c, w0));
            }
        }
        if breaks.len() == 2 {
            breaks.extend(graded(a, b - a, 1.0));
        }
        let x1 = panels_to_points(breaks, GaussLegendre::g16());
        let rho = if d == 1 {
            vec![(0.0, 1.0)]
        } else {
            let area = sphere_area(d - 1);
            panels_to_points(graded(0.0, rho_max, w0), GaussLegendre::g8())
                .into_iter()
                .map(|(r, w)| (r, w * area * r.powi(d as i32 - 2)))
                .collect()
        };
        Self { x1, rho }
    }

    /// `∫ f(x1, ρ)` with the cylindrical measure; `f` receives `(x1, ρ)`.
    fn integrate<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> f64 {
        let mut total = 0.0;
        for &(x, wx) in &self.x1 {
            let mut inner = 0.0;
            for &(rho, wr) in &self.rho {
                inner += wr * f(x, rho);
            }
            total += wx * inner;
        }
        total
    }
}

fn localization_radius(p: f64) -> f64 {
    (36.0 / (p - 1.0)).min(60.0)
}

/// `g(r) = ∫ Q^p(x) ∂₁Q(x - r e₁) dx` by direct quadrature (positive for r > 0).
pub fn interaction_g(profile: &RadialProfile, r: f64) -> GValue {
    let p = profile.params.p;
    let x_max = localization_radius(p);
    let layout = Layout::new(profile, -x_max, x_max, x_max, &[0.0, r]);
    let g = layout.integrate(|x1, rho| {
        let s0 = (x1 * x1 + rho * rho).sqrt();
        let y1 = x1 - r;
        let s1 = (y1 * y1 + rho * rho).sqrt();
        let q0 = profile.q(s0);
        let dq1 = if s1 > 0.0 { profile.eval(s1).1 * y1 / s1 } else { 0.0 };
        q0.powf(p) * dq1
    });
    GValue {
        g,
        underflow: g.abs() < 1e-300,
    }
}

/// The same kernel from the gradient form `-∫ ∂₁(Q^p)(x) Q(x - r e₁) dx`.
pub fn interaction_g_gradient_form(profile: &RadialProfile, r: f64) -> f64 {
    let p = profile.params.p;
    let x_max = localization_radius(p);
    let layout = Layout::new(profile, -x_max, x_max, x_max, &[0.0, r]);
    -layout.integrate(|x1, rho| {
        let s0 = (x1 * x1 + rho * rho).sqrt();
        let y1 = x1 - r;
        let s1 = (y1 * y1 + rho * rho).sqrt();
        let (q0, dq0) = profile.eval(s0);
        let d1q = if s0 > 0.0 { dq0 * x1 / s0 } else { 0.0 };
        p * q0.powf(p - 1.0) * d1q * profile.q(s1)
    })
}

/// `c_g = ∫ Q^p e^{-x₁} dx`.
pub fn c_g_constant(profile: &RadialProfile) -> f64 {
    let p = profile.params.p;
    let x_max = (40.0 / (p - 1.0)).min(80.0);
    let layout = Layout::new(profile, -x_max, x_max, x_max, &[0.0]);
    layout.integrate(|x1, rho| {
        let s0 = (x1 * x1 + rho * rho).sqrt();
        profile.q(s0).powf(p) * (-x1).exp()
    })
}

impl InteractionKernel {
    /// Tabulates the kernel with the damping of `profile.params`.
    pub fn build(profile: &RadialProfile) -> Result<Self> {
        Self::build_with(profile, KernelOptions::default())
    }

    pub fn build_with(profile: &RadialProfile, options: KernelOptions) -> Result<Self> {
        let params = profile.params;
        let constants = ground_state_constants(profile);
        // a few nodes below r_min keep the interpolation stencil centered
        let start = (options.r_min - 3.0 * options.step).max(options.step);
        let n = ((options.r_tab - start) / options.step).round() as usize + 1;
        if n < 8 {
            return Err(DnkgError::InvalidInput("kernel table too short".into()));
        }
        let mut underflow = false;
        let g_table: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let r = start + k as f64 * options.step;
                let v = interaction_g(profile, r);
                underflow |= v.underflow;
                (r, v.g)
            })
            .collect();
        if g_table.iter().any(|(_, g)| !(*g > 0.0)) {
            return Err(DnkgError::NonConvergence(
                "interaction kernel is not positive on the table".into(),
            ));
        }
        let m = 0.5 * (params.d as f64 - 1.0);
        // g is odd in r, so ln(g/r) is smooth down to the origin
        let ln_g_table: Vec<f64> = g_table.iter().map(|(r, g)| (g / r).ln()).collect();

        // tail: g r^m e^r ≈ A (1 + B/r + C/r²) over the window
        let (ws, we) = options.tail_window;
        let (rs, scaled): (Vec<f64>, Vec<f64>) = g_table
            .iter()
            .filter(|(r, _)| *r >= ws && *r <= we)
            .map(|(r, g)| (*r, g * r.powf(m) * r.exp()))
            .unzip();
        let (coef, _) = linear_least_squares(&rs, &scaled, 3, |r| vec![1.0, 1.0 / r, 1.0 / (r * r)])
            .ok_or_else(|| DnkgError::NonConvergence("tail fit of the kernel failed".into()))?;
        let c_g = c_g_constant(profile);
        let c_g_tail = coef[0] / profile.c_q;

        // continuation ln g = a - r - m ln r - beta / r, anchored at r_tab
        let (lr, lv): (Vec<f64>, Vec<f64>) = g_table
            .iter()
            .filter(|(r, _)| *r >= options.r_tab - 10.0)
            .map(|(r, g)| (*r, g.ln() + r + m * r.ln()))
            .unzip();
        let (lc, _) = linear_least_squares(&lr, &lv, 2, |r| vec![1.0, -1.0 / r])
            .ok_or_else(|| DnkgError::NonConvergence("kernel continuation fit failed".into()))?;
        let tail_beta = lc[1];
        let r_end = options.r_tab;
        let g_end = g_table[n - 1].1;
        let tail_a = g_end.ln() + r_end + m * r_end.ln() + tail_beta / r_end;

        let norm = 2.0 * params.alpha * constants.grad_norm_sq;
        let c_star = c_g / norm;
        let mut kernel = Self {
            schema_version: KERNEL_SCHEMA_VERSION,
            params,
            constants,
            c_g,
            c_g_tail,
            c_star,
            kappa: profile.c_q * c_star,
            alpha: params.alpha,
            options,
            g_table,
            table_start: start,
            tail_a,
            tail_beta,
            ln_g_table,
            g_cumulative: Vec::new(),
            underflow,
        };
        kernel.g_cumulative = kernel.cumulative_time_scale(300.0);
        Ok(kernel)
    }

    /// Same kernel with another damping (𝓕 scales like 1/α).
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let params = self.params.with_alpha(alpha);
        params.validate()?;
        let mut k = self.clone();
        k.params = params;
        k.alpha = alpha;
        k.c_star = self.c_star * self.alpha / alpha;
        k.kappa = self.kappa * self.alpha / alpha;
        k.g_cumulative = k.cumulative_time_scale(300.0);
        Ok(k)
    }

    fn force_norm(&self) -> f64 {
        2.0 * self.alpha * self.constants.grad_norm_sq
    }

    /// `ln g(r)` and its derivative.
    fn ln_g(&self, r: f64) -> (f64, f64) {
        let m = 0.5 * (self.params.d as f64 - 1.0);
        if r <= self.options.r_tab {
            // six-point Lagrange on the uniform table; one-sided stencils at the ends
            let r = r.max(self.options.r_min);
            let (l, dl) = lagrange_uniform(&self.ln_g_table, self.table_start, self.options.step, 3, r);
            (l + r.ln(), dl + 1.0 / r)
        } else {
            (
                self.tail_a - r - m * r.ln() - self.tail_beta / r,
                -1.0 - m / r + self.tail_beta / (r * r),
            )
        }
    }

    /// Tabulated/continued `g(r)`; below `r_min` the value at `r_min` is returned.
    pub fn g(&self, r: f64) -> f64 {
        self.ln_g(r).0.exp()
    }

    /// `𝓕(r) = g(r) / (2α‖∂₁Q‖²)`.
    pub fn force(&self, r: f64) -> f64 {
        self.g(r) / self.force_norm()
    }

    /// `𝓕'(r)`.
    pub fn force_derivative(&self, r: f64) -> f64 {
        let (l, dl) = self.ln_g(r);
        if r < self.options.r_min {
            return 0.0;
        }
        l.exp() * dl / self.force_norm()
    }

    /// `c_⋆ r^{-(d-1)/2} e^{-r}` as normalized by the definition of `c_⋆`.
    pub fn c_star_asymptote(&self, r: f64) -> f64 {
        let m = 0.5 * (self.params.d as f64 - 1.0);
        self.c_star * r.powf(-m) * (-r).exp()
    }

    fn cumulative_time_scale(&self, r_far: f64) -> Vec<f64> {
        let rule = GaussLegendre::g8();
        let h = self.options.step;
        let cells = ((r_far - self.options.r_min) / h).ceil() as usize;
        let mut out = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 0..cells {
            let a = self.options.r_min + k as f64 * h;
            acc += rule.integrate(a, a + h, |s| 1.0 / self.force(s));
            out.push(acc);
        }
        out
    }
}

/// 𝓕(r) for the kernel.
pub fn force(kernel: &InteractionKernel, r: f64) -> f64 {
    kernel.force(r)
}

/// `G(r) = ∫_1^r ds / 𝓕(s)`.
pub fn time_scale_g(kernel: &InteractionKernel, r: f64) -> f64 {
    let r0 = kernel.options.r_min;
    if r <= r0 {
        return 0.0;
    }
    let h = kernel.options.step;
    let k = (((r - r0) / h).floor() as usize).min(kernel.g_cumulative.len() - 1);
    let a = r0 + k as f64 * h;
    let base = kernel.g_cumulative[k];
    let rule = GaussLegendre::g8();
    let mut rest = 0.0;
    let mut lo = a;
    while r - lo > 1e-15 {
        let hi = (lo + h).min(r);
        rest += rule.integrate(lo, hi, |s| 1.0 / kernel.force(s));
        lo = hi;
    }
    base + rest
}

/// Solves `G(D) = t` by bisection.
pub fn invert_time_scale(kernel: &InteractionKernel, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(DnkgError::InvalidInput(format!("time t = {t} must be positive")));
    }
    let mut lo = kernel.options.r_min;
    let mut hi = lo + 1.0;
    while time_scale_g(kernel, hi) < t {
        lo = hi;
        hi *= 1.5;
        if hi > 600.0 {
            return Err(DnkgError::NonConvergence(format!("G(r) = {t} has no root below r = 600")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if time_scale_g(kernel, mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Extrapolated `c₀ = lim D_pred(t) - log t + ((d-1)/2) log log t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C0Estimate {
    pub c0: f64,
    pub error_bar: f64,
    /// `log(c_q c_⋆)`, the limit implied by the force tail.
    pub log_kappa: f64,
    /// `log c_⋆`.
    pub log_c_star: f64,
    /// `(t, D_pred(t) - log t + ((d-1)/2) log log t)`.
    pub sequence: Vec<(f64, f64)>,
}

/// Richardson-type extrapolation of the time-scale inversion over
/// `t = 10^3 … 10^60`, with basis `{1, 1/L, ln L / L, 1/L²}` in `L = ln t`.
pub fn asymptotic_c0(kernel: &InteractionKernel) -> Result<C0Estimate> {
    let m = 0.5 * (kernel.params.d as f64 - 1.0);
    let mut sequence = Vec::new();
    for k in 3..=60 {
        let t = 10f64.powi(k);
        let dp = invert_time_scale(kernel, t)?;
        let l = t.ln();
        sequence.push((t, dp - l + m * l.ln()));
    }
    let ls: Vec<f64> = sequence.iter().map(|(t, _)| t.ln()).collect();
    let vs: Vec<f64> = sequence.iter().map(|(_, v)| *v).collect();
    let full = |l: f64| vec![1.0, 1.0 / l, l.ln() / l, 1.0 / (l * l)];
    let reduced = |l: f64| vec![1.0, 1.0 / l, l.ln() / l];
    let (a, _) = linear_least_squares(&ls, &vs, 4, full)
        .ok_or_else(|| DnkgError::NonConvergence("c0 extrapolation failed".into()))?;
    let (b, _) = linear_least_squares(&ls, &vs, 3, reduced)
        .ok_or_else(|| DnkgError::NonConvergence("c0 extrapolation failed".into()))?;
    let err = (a[0] - b[0]).abs();
    if !a[0].is_finite() || err > 0.05 {
        return Err(DnkgError::NonConvergence(format!(
            "c0 extrapolation unstable: {} vs {} (sequence {:?})",
            a[0], b[0], vs
        )));
    }
    Ok(C0Estimate {
        c0: a[0],
        error_bar: err,
        log_kappa: kernel.kappa.ln(),
        log_c_star: kernel.c_star.ln(),
        sequence,
    })
}

/// Scaling checks of two-center integrals over a ladder of separations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundChecks {
    pub separations: Vec<f64>,
    pub m: f64,
    pub m_prime: f64,
    /// `∫|Q₁Q₂|^{m'} + ∫(|∇Q₁||∇Q₂|)^{m'}`.
    pub product_integrals: Vec<f64>,
    /// Least-squares slope of the log of `product_integrals` per unit separation.
    pub product_log_slope: f64,
    /// Decays at least like `e^{-m D}`.
    pub product_bound_holds: bool,
    /// `∫|Q₁|^m |Q₂|^{m'} / q(D)^m`.
    pub mixed_ratios: Vec<f64>,
    pub mixed_bound_holds: bool,
    /// `θ = (1 + θ⋆)/2` and `∫|Q₁|²|Q₂|^{p-1} / q(D)^θ`.
    pub theta: f64,
    pub theta_ratios: Vec<f64>,
    pub theta_bound_holds: bool,
}

fn two_center_integral<F: Fn(f64, f64, f64, f64) -> f64>(
    profile: &RadialProfile,
    sep: f64,
    decay_rate: f64,
    f: F,
) -> f64 {
    let x_max = (45.0 / decay_rate).min(80.0);
    let layout = Layout::new(profile, -x_max, sep + x_max, x_max, &[0.0, sep]);
    layout.integrate(|x1, rho| {
        let s0 = (x1 * x1 + rho * rho).sqrt();
        let y1 = x1 - sep;
        let s1 = (y1 * y1 + rho * rho).sqrt();
        let (q1, dq1) = profile.eval(s0);
        let (q2, dq2) = profile.eval(s1);
        f(q1, dq1.abs(), q2, dq2.abs())
    })
}

/// Quadrature checks of the two-center interaction integrals at the given
/// separations: the product integrals with exponent `m'` decay at least like
/// `e^{-m D}`, `∫|Q₁|^m|Q₂|^{m'} ≲ q(D)^m`, and `∫|Q₁|²|Q₂|^{p-1} ≲ q(D)^θ`.
pub fn interaction_integral_bounds(
    profile: &RadialProfile,
    separations: &[f64],
    m: f64,
    m_prime: f64,
) -> Result<BoundChecks> {
    if !(m > 0.0 && m < m_prime) {
        return Err(DnkgError::InvalidInput(format!("need 0 < m < m' (got {m}, {m_prime})")));
    }
    if separations.len() < 2 || separations.iter().any(|s| !(*s >= 5.0)) {
        return Err(DnkgError::InvalidInput(
            "need at least two separations, each at least 5".into(),
        ));
    }
    let p = profile.params.p;
    let theta_star = (p - 1.0).min(2.0);
    let theta = 0.5 * (1.0 + theta_star);
    let product: Vec<f64> = separations
        .iter()
        .map(|&s| {
            two_center_integral(profile, s, m_prime, |q1, g1, q2, g2| {
                (q1 * q2).powf(m_prime) + (g1 * g2).powf(m_prime)
            })
        })
        .collect();
    let logs: Vec<f64> = product.iter().map(|v| v.ln()).collect();
    let (_, slope) = crate::numerics::fit::line_fit(separations, &logs)
        .ok_or_else(|| DnkgError::InvalidInput("degenerate separations".into()))?;
    let mixed: Vec<f64> = separations
        .iter()
        .map(|&s| {
            two_center_integral(profile, s, m, |q1, _, q2, _| q1.powf(m) * q2.powf(m_prime))
                / profile.q(s).powf(m)
        })
        .collect();
    let theta_ratios: Vec<f64> = separations
        .iter()
        .map(|&s| {
            two_center_integral(profile, s, 1.0, |q1, _, q2, _| q1 * q1 * q2.powf(p - 1.0))
                / profile.q(s).powf(theta)
        })
        .collect();
    let bounded = |v: &[f64]| {
        let first = v[0];
        v.iter().all(|x| *x <= 1.5 * first && *x > 0.0)
    };
    Ok(BoundChecks {
        separations: separations.to_vec(),
        m,
        m_prime,
        product_bound_holds: slope <= -m,
        product_integrals: product,
        product_log_slope: slope,
        mixed_bound_holds: bounded(&mixed),
        mixed_ratios: mixed,
        theta,
        theta_bound_holds: bounded(&theta_ratios),
        theta_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state;

    fn cubic_line() -> RadialProfile {
        solve_ground_state(ModelParameters::new(1, 3.0, 1.0).unwrap(), 30.0, 1e-8).unwrap()
    }

    #[test]
    fn both_kernel_forms_agree() {
        let prof = cubic_line();
        for r in [1.5, 4.0, 10.0, 25.0] {
            let a = interaction_g(&prof, r).g;
            let b = interaction_g_gradient_form(&prof, r);
            assert!((a - b).abs() < 1e-9 * a, "r = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn c_g_closed_form_line_cubic() {
        let prof = cubic_line();
        assert!((c_g_constant(&prof) - 4.0 * 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn kernel_interpolation_matches_quadrature() {
        let prof = cubic_line();
        let k = InteractionKernel::build(&prof).unwrap();
        for r in [1.3, 2.71, 9.9, 17.05, 33.3] {
            let direct = interaction_g(&prof, r).g;
            let tol = if r < 10.0 { 1e-6 } else { 1e-8 };
            assert!((k.g(r) / direct - 1.0).abs() < tol, "r = {r}: {}", k.g(r) / direct - 1.0);
        }
        // continuation stays smooth past the table
        let r = 40.0;
        assert!((k.g(r + 1e-9) / k.g(r - 1e-9) - 1.0).abs() < 1e-6);
        assert!((k.g(45.0) * 45f64.exp() / 16.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn time_scale_basics() {
        let prof = cubic_line();
        let k = InteractionKernel::build(&prof).unwrap();
        assert_eq!(time_scale_g(&k, 1.0), 0.0);
        let mut prev = 0.0;
        for r in [1.5, 3.0, 7.0, 15.0, 40.0, 60.0] {
            let g = time_scale_g(&k, r);
            assert!(g > prev);
            prev = g;
        }
        let d = invert_time_scale(&k, 1e6).unwrap();
        assert!((time_scale_g(&k, d) / 1e6 - 1.0).abs() < 1e-9);
    }
}

//! Radial ground state `q(r)` of `-ΔQ + Q - Q^p = 0` by shooting, with an
//! analytic tail spliced beyond the trusted part of the trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{DnkgError, Result};
use crate::numerics::bessel::{radial_tail_shape, TailShape};
use crate::numerics::fit::linear_least_squares;
use crate::numerics::interp::hermite;
use crate::numerics::quadrature::simpson_uniform;
use crate::params::{sphere_area, ModelParameters};

pub const PROFILE_SCHEMA_VERSION: u32 = 1;

/// Knobs of the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// RK4 step.
    pub step: f64,
    /// Store every n-th RK4 node.
    pub store_every: usize,
    /// The trajectory is trusted while the two bracketing shots agree to this relative accuracy.
    pub trust_rel: f64,
    /// ...and while q exceeds this floor.
    pub trust_floor: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            store_every: 5,
            trust_rel: 1e-7,
            trust_floor: 1e-12,
        }
    }
}

/// Measured accuracy figures of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileTolerances {
    pub tol: f64,
    /// max |q r^{(d-1)/2} e^r - c_q| over the last five units before `r_max`.
    pub tol_tail: f64,
    /// max ODE residual over interior grid nodes.
    pub ode_residual: f64,
    /// |grid value - asymptote| at the splice point.
    pub splice_jump: f64,
}

/// Ground-state profile on a uniform radial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub schema_version: u32,
    pub params: ModelParameters,
    pub r_grid: Vec<f64>,
    pub q_values: Vec<f64>,
    pub q_prime_values: Vec<f64>,
    pub r_max: f64,
    pub c_q: f64,
    /// Shooting parameter q(0).
    pub q0: f64,
    /// Beyond this radius the asymptotic tail is used.
    pub r_trust: f64,
    pub grid_step: f64,
    pub tolerances: ProfileTolerances,
    /// Rebuilt on demand; a deserialized profile evaluates the tail directly.
    #[serde(skip)]
    tail: Option<TailShape>,
}

/// Constants of the ground state used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateConstants {
    pub c_q: f64,
    /// ‖∂₁Q‖².
    pub grad_norm_sq: f64,
    /// ‖Q‖².
    pub mass_sq: f64,
    /// E(Q, 0).
    pub energy: f64,
    /// ∫ Q^{p+1}.
    pub nonlinear_integral: f64,
}

/// Tail-constant fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_q: f64,
    pub window: (f64, f64),
    /// Coefficient `s` of the fit `c + s / r` over the window.
    pub inverse_r_slope: f64,
    /// Relative spread of the ratio over the window.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Crossing,
    Turning,
    Unclassified,
}

struct Rhs {
    dm1: f64,
    p: f64,
    p_int: Option<i32>,
}

impl Rhs {
    fn new(params: &ModelParameters) -> Self {
        let p_int = if (params.p - params.p.round()).abs() < 1e-14 {
            Some(params.p.round() as i32)
        } else {
            None
        };
        Self {
            dm1: params.d as f64 - 1.0,
            p: params.p,
            p_int,
        }
    }

    #[inline]
    fn pow_signed(&self, q: f64) -> f64 {
        match self.p_int {
            Some(n) => {
                let a = q.abs().powi(n);
                if q < 0.0 {
                    -a
                } else {
                    a
                }
            }
            None => q.abs().powf(self.p) * q.signum(),
        }
    }

    #[inline]
    fn eval(&self, r: f64, q: f64, w: f64) -> (f64, f64) {
        (w, -self.dm1 / r * w + q - self.pow_signed(q))
    }
}

const NEAR_ORIGIN_STEPS: usize = 100;

#[inline]
fn rk4_step(rhs: &Rhs, r: f64, q: f64, w: f64, h: f64) -> (f64, f64) {
    let (k1q, k1w) = rhs.eval(r, q, w);
    let (k2q, k2w) = rhs.eval(r + 0.5 * h, q + 0.5 * h * k1q, w + 0.5 * h * k1w);
    let (k3q, k3w) = rhs.eval(r + 0.5 * h, q + 0.5 * h * k2q, w + 0.5 * h * k2w);
    let (k4q, k4w) = rhs.eval(r + h, q + h * k3q, w + h * k3w);
    (
        q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )
}

/// Integrates one trajectory from the origin with `q(0) = q0`. `record`
/// receives `(q, q')` every `store_every` steps starting at r = 0.
fn shoot(
    rhs: &Rhs,
    d: usize,
    q0: f64,
    h: f64,
    r_end: f64,
    store_every: usize,
    mut record: Option<&mut Vec<(f64, f64)>>,
) -> Shot {
    let f0 = q0 - rhs.pow_signed(q0);
    let a2 = f0 / (2.0 * d as f64);
    let fp0 = 1.0 - rhs.p * q0.abs().powf(rhs.p - 1.0);
    let a4 = fp0 * a2 / (4.0 * (d as f64 + 2.0));
    let mut q = q0 + a2 * h * h + a4 * h.powi(4);
    let mut w = 2.0 * a2 * h + 4.0 * a4 * h.powi(3);
    if let Some(rec) = record.as_mut() {
        rec.push((q0, 0.0));
        if store_every == 1 {
            rec.push((q, w));
        }
    }
    let steps = (r_end / h).round() as usize;
    let mut outcome = Shot::Unclassified;
    for i in 1..steps {
        // the (d-1)/r coefficient is stiff relative to h near the origin
        let sub = if i < NEAR_ORIGIN_STEPS && d > 1 { 32 } else { 1 };
        let hh = h / sub as f64;
        for k in 0..sub {
            let r = i as f64 * h + k as f64 * hh;
            (q, w) = rk4_step(rhs, r, q, w, hh);
        }
        if outcome == Shot::Unclassified {
            if q <= 0.0 {
                outcome = Shot::Crossing;
            } else if w > 0.0 {
                outcome = Shot::Turning;
            }
        }
        match record.as_mut() {
            Some(rec) => {
                if (i + 1) % store_every == 0 {
                    rec.push((q, w));
                }
                if !q.is_finite() || q.abs() > 1e6 {
                    // keep the record length but stop wasting work
                    let remaining = (steps - i - 1) / store_every;
                    rec.extend(std::iter::repeat((f64::NAN, f64::NAN)).take(remaining));
                    break;
                }
            }
            None => {
                if outcome != Shot::Unclassified {
                    return outcome;
                }
            }
        }
    }
    outcome
}

/// Solves for the ground state with default shooting options.
pub fn solve_ground_state(params: ModelParameters, r_max: f64, tol: f64) -> Result<RadialProfile> {
    solve_ground_state_with(params, r_max, tol, &ShootingOptions::default())
}

pub fn solve_ground_state_with(
    params: ModelParameters,
    r_max: f64,
    tol: f64,
    opts: &ShootingOptions,
) -> Result<RadialProfile> {
    params.validate()?;
    if !(r_max >= 20.0) {
        return Err(DnkgError::InvalidInput(format!("r_max = {r_max} must be at least 20")));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(DnkgError::InvalidInput(format!("tol = {tol} must lie in (0, 1e-6]")));
    }
    if !(opts.step > 0.0 && opts.step <= 1e-3) || opts.store_every == 0 {
        return Err(DnkgError::InvalidInput("shooting step must lie in (0, 1e-3]".into()));
    }
    let d = params.d;
    let h = opts.step;
    let rhs = Rhs::new(&params);
    let horizon = r_max.max(40.0);
    let classify = |q0: f64| match shoot(&rhs, d, q0, h, horizon, 1, None) {
        Shot::Crossing => Shot::Crossing,
        _ => Shot::Turning,
    };

    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut doublings = 0;
    while classify(hi) != Shot::Crossing {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 40 {
            return Err(DnkgError::NonConvergence(
                "no overshooting trajectory found; cannot bracket q(0)".into(),
            ));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid) {
            Shot::Crossing => hi = mid,
            _ => lo = mid,
        }
    }
    if hi - lo > tol * 1e-2 {
        return Err(DnkgError::NonConvergence(format!(
            "bisection bracket [{lo}, {hi}] did not close"
        )));
    }

    let store = opts.store_every;
    let hs = h * store as f64;
    let n_nodes = (r_max / hs).round() as usize + 1;
    let r_end = (n_nodes - 1) as f64 * hs + h;
    let mut rec_lo = Vec::with_capacity(n_nodes + 1);
    let mut rec_hi = Vec::with_capacity(n_nodes + 1);
    shoot(&rhs, d, lo, h, r_end, store, Some(&mut rec_lo));
    shoot(&rhs, d, hi, h, r_end, store, Some(&mut rec_hi));
    rec_lo.truncate(n_nodes);
    rec_hi.truncate(n_nodes);
    if rec_lo.len() < n_nodes || rec_hi.len() < n_nodes {
        return Err(DnkgError::NonConvergence("trajectory record too short".into()));
    }

    let mut trust = 0;
    for i in 1..n_nodes {
        let (ql, wl) = rec_lo[i];
        let (qh, wh) = rec_hi[i];
        let qa = 0.5 * (ql + qh);
        let ok = ql > 0.0
            && qh > 0.0
            && wl < 0.0
            && wh < 0.0
            && qa > opts.trust_floor
            && (qh - ql).abs() <= opts.trust_rel * qa;
        if !ok {
            break;
        }
        trust = i;
    }
    let r_trust = trust as f64 * hs;
    if r_trust < 6.0 {
        return Err(DnkgError::NonConvergence(format!(
            "trusted region ends at r = {r_trust:.3}; the shooting trajectory is not resolved"
        )));
    }

    let r_grid: Vec<f64> = (0..n_nodes).map(|i| i as f64 * hs).collect();
    let mut q_values: Vec<f64> = (0..n_nodes).map(|i| 0.5 * (rec_lo[i].0 + rec_hi[i].0)).collect();
    let mut q_prime_values: Vec<f64> = (0..n_nodes).map(|i| 0.5 * (rec_lo[i].1 + rec_hi[i].1)).collect();

    // tail constant from the last trusted unit
    let i_fit = ((r_trust - 1.0) / hs).round() as usize;
    let ratios: Vec<f64> = (i_fit..=trust)
        .map(|i| q_values[i] / radial_tail_shape(d, r_grid[i]).0)
        .collect();
    let c_q = ratios.iter().sum::<f64>() / ratios.len() as f64;

    let splice_jump = (q_values[trust] - c_q * radial_tail_shape(d, r_trust).0).abs();
    for i in trust + 1..n_nodes {
        let (w, dw) = radial_tail_shape(d, r_grid[i]);
        q_values[i] = c_q * w;
        q_prime_values[i] = c_q * dw;
    }

    let mut profile = RadialProfile {
        schema_version: PROFILE_SCHEMA_VERSION,
        params,
        r_grid,
        q_values,
        q_prime_values,
        r_max: (n_nodes - 1) as f64 * hs,
        c_q,
        q0: 0.5 * (lo + hi),
        r_trust,
        grid_step: hs,
        tail: Some(TailShape::new(params.d, r_trust)),
        tolerances: ProfileTolerances {
            tol,
            tol_tail: 0.0,
            ode_residual: 0.0,
            splice_jump,
        },
    };
    profile.tolerances.ode_residual = profile.ode_residual_max();
    profile.tolerances.tol_tail = profile.tail_deviation(profile.r_max - 5.0, profile.r_max);
    Ok(profile)
}

impl RadialProfile {
    /// `(q(r), q'(r))`; cubic Hermite on the trusted grid, exact asymptote beyond.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        if r >= self.r_trust {
            let (w, dw) = match &self.tail {
                Some(t) => t.eval(r),
                None => radial_tail_shape(self.params.d, r),
            };
            return (self.c_q * w, self.c_q * dw);
        }
        let hs = self.grid_step;
        let i = ((r / hs) as usize).min(self.r_grid.len() - 2);
        hermite(
            self.r_grid[i],
            hs,
            self.q_values[i],
            self.q_prime_values[i],
            self.q_values[i + 1],
            self.q_prime_values[i + 1],
            r,
        )
    }

    #[inline]
    pub fn q(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// q'' from the ODE.
    pub fn q_second(&self, r: f64) -> f64 {
        let (q, w) = self.eval(r);
        let d = self.params.d as f64;
        let lap_part = if r.abs() < 1e-8 {
            // q'' + (d-1) q''(0) = q - q^p at the origin
            return (q - self.params.f(q)) / d;
        } else {
            (d - 1.0) / r.abs() * w
        };
        -lap_part + q - self.params.f(q)
    }

    /// One-dimensional view: `(Q(x), Q'(x))` for the even profile on the line.
    pub fn eval_line(&self, x: f64) -> (f64, f64) {
        let (q, w) = self.eval(x.abs());
        (q, if x < 0.0 { -w } else { w })
    }

    /// max |q r^{(d-1)/2} e^r - c_q| over grid nodes in `[a, b]`.
    pub fn tail_deviation(&self, a: f64, b: f64) -> f64 {
        let m = (self.params.d as f64 - 1.0) / 2.0;
        self.r_grid
            .iter()
            .zip(&self.q_values)
            .filter(|(r, _)| **r >= a && **r <= b)
            .map(|(r, q)| (q * r.powf(m) * r.exp() - self.c_q).abs())
            .fold(0.0, f64::max)
    }

    /// Maximum ODE residual `q'' + (d-1)/r q' - q + q^p` over interior nodes,
    /// with q'' from a sixth-order central difference of the stored q'.
    pub fn ode_residual_max(&self) -> f64 {
        let n = self.r_grid.len();
        let hs = self.grid_step;
        let d = self.params.d as f64;
        let w = |j: isize| -> f64 {
            if j < 0 {
                -self.q_prime_values[(-j) as usize]
            } else {
                self.q_prime_values[j as usize]
            }
        };
        let mut worst: f64 = 0.0;
        for i in 1..n - 3 {
            let j = i as isize;
            let d2 = (-w(j - 3) + 9.0 * w(j - 2) - 45.0 * w(j - 1) + 45.0 * w(j + 1) - 9.0 * w(j + 2)
                + w(j + 3))
                / (60.0 * hs);
            let r = self.r_grid[i];
            let q = self.q_values[i];
            let res = d2 + (d - 1.0) / r * self.q_prime_values[i] - q + self.params.f(q);
            worst = worst.max(res.abs());
        }
        worst
    }

    /// Checks the structural invariants (monotone decrease, positivity, q'(0) = 0).
    pub fn check_invariants(&self) -> Result<()> {
        if self.q_prime_values[0] != 0.0 {
            return Err(DnkgError::NonConvergence("q'(0) is not zero".into()));
        }
        for i in 1..self.q_values.len() {
            if !(self.q_values[i] > 0.0 && self.q_values[i] < self.q_values[i - 1]) {
                return Err(DnkgError::NonConvergence(format!(
                    "profile not positive and decreasing at r = {}",
                    self.r_grid[i]
                )));
            }
        }
        Ok(())
    }

    /// Radial integral `|S^{d-1}| ∫_0^∞ g(q, q', r) r^{d-1} dr` by Simpson on the
    /// grid; `tail` gives the integral beyond `r_max`.
    fn radial_integral<G: Fn(f64, f64, f64) -> f64>(&self, g: G, tail: f64) -> f64 {
        let dm1 = self.params.d as i32 - 1;
        let vals: Vec<f64> = self
            .r_grid
            .iter()
            .zip(self.q_values.iter().zip(&self.q_prime_values))
            .map(|(r, (q, w))| g(*q, *w, *r) * r.powi(dm1))
            .collect();
        sphere_area(self.params.d) * (simpson_uniform(&vals, self.grid_step) + tail)
    }
}

/// Serves `(q, q')` at any `r ≥ 0`.
pub fn evaluate_profile(profile: &RadialProfile, r: f64) -> (f64, f64) {
    profile.eval(r)
}

/// Fits the tail constant on the trusted part of the trajectory.
///
/// The fitted quantity is `q(r) / w(r)`, where `w` is the normalized decaying
/// solution of the linearized radial equation (`w ~ r^{-(d-1)/2} e^{-r}`), so
/// the ratio is flat up to the nonlinear correction `O(q^{p-1})`.
pub fn decay_constant(profile: &RadialProfile) -> Result<DecayFit> {
    let d = profile.params.d;
    let b = profile.r_trust;
    let a = (b - 5.0).max(1.0);
    let (rs, ratios): (Vec<f64>, Vec<f64>) = profile
        .r_grid
        .iter()
        .zip(&profile.q_values)
        .filter(|(r, _)| **r >= a && **r <= b)
        .map(|(r, q)| (*r, q / radial_tail_shape(d, *r).0))
        .unzip();
    if rs.len() < 10 {
        return Err(DnkgError::TailNotResolved(format!(
            "only {} grid points in the fit window",
            rs.len()
        )));
    }
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / max.abs();
    if !(spread < 0.01) || min <= 0.0 {
        return Err(DnkgError::TailNotResolved(format!(
            "tail ratio varies by {:.3}% over [{a:.2}, {b:.2}]",
            100.0 * spread
        )));
    }
    let (coef, _) = linear_least_squares(&rs, &ratios, 2, |r| vec![1.0, 1.0 / r])
        .ok_or_else(|| DnkgError::TailNotResolved("degenerate fit window".into()))?;
    let last: Vec<f64> = rs
        .iter()
        .zip(&ratios)
        .filter(|(r, _)| **r >= b - 1.0)
        .map(|(_, v)| *v)
        .collect();
    Ok(DecayFit {
        c_q: last.iter().sum::<f64>() / last.len() as f64,
        window: (a, b),
        inverse_r_slope: coef[1],
        spread,
    })
}

/// Norms and energy of the ground state.
pub fn ground_state_constants(profile: &RadialProfile) -> GroundStateConstants {
    let p = profile.params.p;
    let d = profile.params.d as f64;
    let r_max = profile.r_max;
    let c2 = profile.c_q * profile.c_q;
    // leading-order tails beyond r_max of the asymptote c_q r^{-(d-1)/2} e^{-r}
    let tail_sq = c2 * (-2.0 * r_max).exp() / 2.0;
    let mass_sq = profile.radial_integral(|q, _, _| q * q, tail_sq);
    let grad_sq = profile.radial_integral(|_, w, _| w * w, tail_sq);
    let nonlinear_integral = profile.radial_integral(|q, _, _| q.abs().powf(p + 1.0), 0.0);
    GroundStateConstants {
        c_q: profile.c_q,
        grad_norm_sq: grad_sq / d,
        mass_sq,
        energy: 0.5 * (grad_sq + mass_sq) - nonlinear_integral / (p + 1.0),
        nonlinear_integral,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(p: f64, x: f64) -> f64 {
        ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0)) * (1.0 / ((p - 1.0) * x / 2.0).cosh()).powf(2.0 / (p - 1.0))
    }

    #[test]
    fn cubic_line_soliton_matches_sech() {
        let prof = solve_ground_state(ModelParameters::new(1, 3.0, 1.0).unwrap(), 30.0, 1e-8).unwrap();
        assert!((prof.q0 - 2f64.sqrt()).abs() < 1e-9);
        let err = prof
            .r_grid
            .iter()
            .zip(&prof.q_values)
            .map(|(r, q)| (q - closed_form(3.0, *r)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "max error {err}");
        prof.check_invariants().unwrap();
        assert!(prof.tolerances.ode_residual < 1e-8);
        assert!(prof.tolerances.splice_jump < 1e-6);
        let (q, w) = evaluate_profile(&prof, 0.0);
        assert!((q - 2f64.sqrt()).abs() < 1e-9 && w == 0.0);
        let q5 = prof.q(5.0);
        assert!((q5 - 2f64.sqrt() / 5f64.cosh()).abs() < 1e-10);
        let q30 = prof.q(30.0);
        assert!((q30 / (2.0 * 2f64.sqrt() * (-30f64).exp()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn line_solitons_for_other_exponents() {
        for p in [4.0, 5.0, 2.5] {
            let prof = solve_ground_state(ModelParameters::new(1, p, 1.0).unwrap(), 30.0, 1e-8).unwrap();
            let err = prof
                .r_grid
                .iter()
                .zip(&prof.q_values)
                .map(|(r, q)| (q - closed_form(p, *r)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "p = {p}: max error {err}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = ModelParameters { d: 1, p: 3.0, alpha: 1.0 };
        assert!(matches!(solve_ground_state(m, 10.0, 1e-8), Err(DnkgError::InvalidInput(_))));
        assert!(matches!(solve_ground_state(m, 30.0, 1e-3), Err(DnkgError::InvalidInput(_))));
        let bad = ModelParameters { d: 3, p: 6.0, alpha: 1.0 };
        assert!(matches!(
            solve_ground_state(bad, 30.0, 1e-8),
            Err(DnkgError::SubcriticalityViolation(_))
        ));
    }
}

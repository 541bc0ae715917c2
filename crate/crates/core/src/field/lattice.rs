//! Stationary soliton of the semi-discrete equation
//! `-(Q_{i+1} - 2Q_i + Q_{i-1})/h² + Q_i - |Q_i|^{p-1} Q_i = 0`
//! and the ground state of its linearization.

use serde::{Deserialize, Serialize};

use super::SolitonShape;
use crate::error::{DnkgError, Result};
use crate::ground_state::RadialProfile;
use crate::numerics::interp::CubicSpline;
use crate::numerics::tridiag::{thomas_solve, SymTridiag};
use crate::params::ModelParameters;

/// Half-width of the table.
const EXTENT: f64 = 30.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSoliton {
    pub params: ModelParameters,
    pub h: f64,
    /// `Q_h` at `x_i = -X + i h`.
    pub values: Vec<f64>,
    /// Normalized (`h Σ φ² = 1`) positive ground state of the discrete linearization.
    pub phi: Vec<f64>,
    /// Minus the negative eigenvalue of the discrete linearization.
    pub nu0_sq: f64,
    /// Discrete decay rate, `2(cosh(κh) - 1) = h²`.
    pub decay_rate: f64,
    pub newton_residual: f64,
    half: usize,
    // C² interpolants: the modulation residual must be smooth in the centers
    q_spline: CubicSpline,
    phi_spline: CubicSpline,
}

impl LatticeSoliton {
    /// Newton iteration on the even half-lattice started from the continuum profile.
    pub fn new(profile: &RadialProfile, h: f64) -> Result<Self> {
        let params = profile.params;
        if params.d != 1 {
            return Err(DnkgError::InvalidInput("lattice solitons are one-dimensional".into()));
        }
        if !(h > 0.0 && h <= 0.25) {
            return Err(DnkgError::InvalidInput(format!("lattice spacing {h} outside (0, 0.25]")));
        }
        let half = (EXTENT / h).round() as usize;
        let h2 = h * h;
        let mut q: Vec<f64> = (0..half).map(|i| profile.q(i as f64 * h)).collect();
        let residual = |q: &[f64]| -> Vec<f64> {
            (0..half)
                .map(|i| {
                    let left = if i == 0 { q[1] } else { q[i - 1] };
                    let right = if i + 1 < half { q[i + 1] } else { 0.0 };
                    -(right - 2.0 * q[i] + left) / h2 + q[i] - params.f(q[i])
                })
                .collect()
        };
        let mut res = residual(&q);
        let mut norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        for _ in 0..50 {
            if norm < 1e-13 {
                break;
            }
            let diag: Vec<f64> = q.iter().map(|x| 2.0 / h2 + 1.0 - params.f_prime(*x)).collect();
            let sub = vec![-1.0 / h2; half];
            let mut sup = vec![-1.0 / h2; half];
            sup[0] = -2.0 / h2;
            let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
            thomas_solve(&sub, &diag, &sup, &mut delta);
            q.iter_mut().zip(&delta).for_each(|(a, b)| *a += b);
            res = residual(&q);
            norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        }
        if !(norm < 1e-11) {
            return Err(DnkgError::NonConvergence(format!(
                "lattice soliton Newton residual {norm:.3e}"
            )));
        }
        let values: Vec<f64> = (0..2 * half - 1)
            .map(|j| q[(j as isize - (half as isize - 1)).unsigned_abs()])
            .collect();

        // linearization on the full lattice, Dirichlet beyond the table
        let a: Vec<f64> = values.iter().map(|x| 2.0 / h2 + 1.0 - params.f_prime(*x)).collect();
        let b = vec![-1.0 / h2; values.len() - 1];
        let op = SymTridiag::new(a, b);
        let lambda = op.eigenvalue(0);
        if !(lambda < 0.0) || op.eigenvalue(1) < -1e-8 {
            return Err(DnkgError::SpectralAnomaly(
                "discrete linearization must have exactly one negative eigenvalue".into(),
            ));
        }
        let (lambda, mut phi) = op.eigenvector(lambda, 50)?;
        let s = (h * phi.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let sign = if phi[half - 1] < 0.0 { -1.0 } else { 1.0 };
        phi.iter_mut().for_each(|x| *x *= sign / s);

        let xs: Vec<f64> = (0..values.len())
            .map(|j| (j as f64 - (half - 1) as f64) * h)
            .collect();
        let q_spline = CubicSpline::natural(xs.clone(), values.clone());
        let phi_spline = CubicSpline::natural(xs, phi.clone());
        Ok(Self {
            params,
            h,
            values,
            phi,
            nu0_sq: -lambda,
            decay_rate: (1.0 + 0.5 * h2).acosh() / h,
            newton_residual: norm,
            half,
            q_spline,
            phi_spline,
        })
    }

    fn interpolate(&self, spline: &CubicSpline, x: f64) -> (f64, f64) {
        let edge = (self.half - 5) as f64 * self.h;
        if x.abs() <= edge {
            return spline.eval(x);
        }
        // exponential continuation with the discrete decay rate
        let xe = edge.copysign(x);
        let (v, _) = spline.eval(xe);
        let e = (-self.decay_rate * (x.abs() - edge)).exp();
        (v * e, -self.decay_rate * x.signum() * v * e)
    }

    /// `φ_h(x)` and its derivative.
    pub fn phi_line(&self, x: f64) -> (f64, f64) {
        self.interpolate(&self.phi_spline, x)
    }
}

impl SolitonShape for LatticeSoliton {
    fn value(&self, x: f64) -> (f64, f64) {
        self.interpolate(&self.q_spline, x)
    }

    fn amplitude(&self) -> f64 {
        self.values[self.half - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state;

    #[test]
    fn lattice_soliton_is_close_to_continuum() {
        let prof = solve_ground_state(ModelParameters::new(1, 3.0, 1.0).unwrap(), 30.0, 1e-8).unwrap();
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let lat = LatticeSoliton::new(&prof, h).unwrap();
            assert!(lat.newton_residual < 1e-11);
            let err = (0..200)
                .map(|i| {
                    let x = -5.0 + 0.05 * i as f64 + 0.013;
                    (lat.value(x).0 - prof.eval_line(x).0).abs()
                })
                .fold(0.0, f64::max);
            errs.push(err);
            // ν₀² = 3 for the cubic line soliton, O(h²) on the lattice
            assert!((lat.nu0_sq - 3.0).abs() < 0.5 * h, "h = {h}: {}", lat.nu0_sq);
            assert!(lat.phi_line(0.0).0 > 0.0);
        }
        // second order in h
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }
}

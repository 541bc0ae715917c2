//! Model parameters and the derived exponent ladder used by the diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{DnkgError, Result};

/// Dimension, nonlinearity exponent and damping of the equation
/// `u_tt - Δu + 2α u_t + u - |u|^{p-1} u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub d: usize,
    pub p: f64,
    pub alpha: f64,
}

impl ModelParameters {
    /// Builds and validates a parameter set.
    pub fn new(d: usize, p: f64, alpha: f64) -> Result<Self> {
        let params = Self { d, p, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.d) {
            return Err(DnkgError::SubcriticalityViolation(format!(
                "dimension d = {} outside 1..=5",
                self.d
            )));
        }
        if !self.p.is_finite() || self.p <= 2.0 {
            return Err(DnkgError::SubcriticalityViolation(format!(
                "exponent p = {} must exceed 2",
                self.p
            )));
        }
        if self.d >= 3 {
            let critical = (self.d as f64 + 2.0) / (self.d as f64 - 2.0);
            if self.p >= critical {
                return Err(DnkgError::SubcriticalityViolation(format!(
                    "exponent p = {} is not energy subcritical for d = {} (needs p < {critical})",
                    self.p, self.d
                )));
            }
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(DnkgError::SubcriticalityViolation(format!(
                "damping alpha = {} must be positive",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Same model with a different damping.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// Power nonlinearity `f(u) = |u|^{p-1} u`.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        u.abs().powf(self.p - 1.0) * u
    }

    /// Primitive `F(u) = |u|^{p+1} / (p+1)`.
    #[inline]
    pub fn big_f(&self, u: f64) -> f64 {
        u.abs().powf(self.p + 1.0) / (self.p + 1.0)
    }

    /// Derivative `f'(u) = p |u|^{p-1}`.
    #[inline]
    pub fn f_prime(&self, u: f64) -> f64 {
        self.p * u.abs().powf(self.p - 1.0)
    }
}

/// Exponents of the asymptotic analysis; θ₁ is a free knob in `(1, θ⋆)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConstants {
    pub theta_star: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta_ast: f64,
}

impl AnalysisConstants {
    /// Default ladder with θ₁ at the midpoint of `(1, θ⋆)`.
    pub fn new(p: f64) -> Self {
        let theta_star = (p - 1.0).min(2.0);
        Self::with_theta1(p, 0.5 * (1.0 + theta_star)).expect("midpoint is admissible")
    }

    pub fn with_theta1(p: f64, theta1: f64) -> Result<Self> {
        let theta_star = (p - 1.0).min(2.0);
        if !(theta1 > 1.0 && theta1 < theta_star) {
            return Err(DnkgError::InvalidInput(format!(
                "theta1 = {theta1} must lie in (1, {theta_star})"
            )));
        }
        Ok(Self {
            theta_star,
            theta1,
            theta2: 0.5 * (theta1 - 1.0),
            theta3: 0.5 * (theta1 + 1.0),
            theta4: 0.25 * (theta1 - 1.0),
            theta_ast: 4.0 / (3.0 - theta_star),
        })
    }
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`; `|S^0| = 2`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        6 => PI * PI * PI,
        _ => {
            // |S^{n-1}| = 2π/(n-2) |S^{n-3}|
            2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_supercritical_and_bad_damping() {
        assert!(ModelParameters::new(3, 5.0, 1.0).is_err());
        assert!(ModelParameters::new(3, 4.9, 1.0).is_ok());
        assert!(ModelParameters::new(1, 2.0, 1.0).is_err());
        assert!(ModelParameters::new(1, 3.0, 0.0).is_err());
        assert!(ModelParameters::new(6, 3.0, 1.0).is_err());
        assert!(ModelParameters::new(0, 3.0, 1.0).is_err());
        // d = 5: critical exponent 7/3
        assert!(ModelParameters::new(5, 2.3, 1.0).is_ok());
        assert!(ModelParameters::new(5, 2.4, 1.0).is_err());
    }

    #[test]
    fn theta_ladder_for_cubic() {
        let c = AnalysisConstants::new(3.0);
        assert_eq!(c.theta_star, 2.0);
        assert_eq!(c.theta1, 1.5);
        assert_eq!(c.theta2, 0.25);
        assert_eq!(c.theta3, 1.25);
        assert_eq!(c.theta4, 0.125);
        assert_eq!(c.theta_ast, 4.0);
        assert!(AnalysisConstants::with_theta1(3.0, 2.0).is_err());
    }

    #[test]
    fn sphere_areas_match_recursion() {
        for n in 3..=6 {
            let rec = 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * sphere_area(n - 2);
            assert!((rec - sphere_area(n)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn theta_invariants_hold(p in 2.01f64..6.0, frac in 0.01f64..0.99) {
            let ts = (p - 1.0).min(2.0);
            let c = AnalysisConstants::with_theta1(p, 1.0 + frac * (ts - 1.0)).unwrap();
            prop_assert!(c.theta1 > 1.0 && c.theta1 < c.theta_star);
            prop_assert!(c.theta3 > 1.0);
            prop_assert!(c.theta_ast > 2.0);
            prop_assert!((c.theta3 - (c.theta2 + 1.0)).abs() < 1e-15);
        }

        #[test]
        fn nonlinearity_is_odd_and_primitive_consistent(p in 2.01f64..5.0, u in -3.0f64..3.0) {
            let m = ModelParameters { d: 1, p, alpha: 1.0 };
            prop_assert!((m.f(-u) + m.f(u)).abs() < 1e-12);
            let h = 1e-5;
            let fd = (m.big_f(u + h) - m.big_f(u - h)) / (2.0 * h);
            prop_assert!((fd - m.f(u)).abs() < 1e-6 * (1.0 + m.f(u).abs()));
        }
    }
}

//! Linearized operator `L = -Δ + 1 - p Q^{p-1}` around the ground state:
//! the negative eigenpair, the kernel check and coercivity probes.

use serde::{Deserialize, Serialize};

use crate::error::{DnkgError, Result};
use crate::ground_state::RadialProfile;
use crate::numerics::interp::lagrange_uniform;
use crate::numerics::tridiag::SymTridiag;
use crate::params::sphere_area;

pub const SPECTRAL_SCHEMA_VERSION: u32 = 1;

/// Radial discretization: cell-centered nodes `r_i = (i + 1/2) h` on `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub r_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { h: 0.02, r_max: 30.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralData {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub alpha: f64,
    pub nu0_sq: f64,
    /// Cell-centered radii of `phi_grid`.
    pub phi_r: Vec<f64>,
    /// Radial samples of φ, normalized in `L²(R^d)`.
    pub phi_grid: Vec<f64>,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub kernel_residual: f64,
    /// Smallest eigenvalue above the negative one in the radial sector.
    pub second_radial_eigenvalue: f64,
    /// Smallest eigenvalue above the kernel in the translation sector.
    pub second_dipole_eigenvalue: f64,
    /// Diagnostic coercivity constant.
    pub c_l: f64,
}

/// `ν± = -α ± sqrt(α² + ν0²)`.
pub fn damped_rates(alpha: f64, nu0_sq: f64) -> (f64, f64) {
    let s = (alpha * alpha + nu0_sq).sqrt();
    (-alpha + s, -alpha - s)
}

/// Angular sector of the radial reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    /// ℓ = 0: radial functions; Neumann at the origin, cell-centered nodes.
    Radial,
    /// ℓ = 1: functions `g(r) x₁/r`, which contain `∂₁Q`; Dirichlet at the origin, nodes `r_i = i h`.
    Dipole,
}

/// Self-adjoint finite-difference form of `L` restricted to one sector:
/// `(L g)_i = -[f_{i+1/2}(g_{i+1}-g_i) - f_{i-1/2}(g_i-g_{i-1})] / (h² w_i) + c_i g_i`
/// with `w = r^{d-1}` at nodes and faces.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub sector: Sector,
    pub h: f64,
    pub r: Vec<f64>,
    pub weight: Vec<f64>,
    pub face: Vec<f64>,
    pub potential: Vec<f64>,
    /// Measure factor turning `Σ g_i² w_i h` into the `L²(R^d)` norm.
    pub measure: f64,
    pub dim: usize,
}

impl SectorOperator {
    pub fn new(profile: &RadialProfile, grid: GridSpec, sector: Sector) -> Self {
        let d = profile.params.d;
        let dm1 = d as i32 - 1;
        let p = profile.params.p;
        let h = grid.h;
        let n = (grid.r_max / h).round() as usize;
        let (r, face): (Vec<f64>, Vec<f64>) = match sector {
            Sector::Radial => (0..n)
                .map(|i| ((i as f64 + 0.5) * h, ((i + 1) as f64 * h).powi(dm1)))
                .unzip(),
            Sector::Dipole => (1..n)
                .map(|i| (i as f64 * h, ((i as f64 + 0.5) * h).powi(dm1)))
                .unzip(),
        };
        let weight: Vec<f64> = r.iter().map(|x| x.powi(dm1)).collect();
        let centrifugal = if sector == Sector::Dipole { d as f64 - 1.0 } else { 0.0 };
        let potential: Vec<f64> = r
            .iter()
            .map(|x| 1.0 - p * profile.q(*x).powf(p - 1.0) + centrifugal / (x * x))
            .collect();
        let measure = match sector {
            Sector::Radial => sphere_area(d),
            Sector::Dipole => sphere_area(d) / d as f64,
        };
        Self { sector, h, r, weight, face, potential, measure, dim: d }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Flux weight through the inner face of node `i`.
    fn inner_face(&self, i: usize) -> f64 {
        match (self.sector, i) {
            (Sector::Radial, 0) => 0.0,
            (Sector::Dipole, 0) => (0.5 * self.h).powi(self.dim as i32 - 1),
            _ => self.face[i - 1],
        }
    }

    /// Symmetrized matrix `W^{1/2} A W^{-1/2}`.
    pub fn symmetric(&self) -> SymTridiag {
        let n = self.len();
        let h2 = self.h * self.h;
        let a: Vec<f64> = (0..n)
            .map(|i| {
                (self.inner_face(i) + self.face[i]) / (h2 * self.weight[i]) + self.potential[i]
            })
            .collect();
        let b: Vec<f64> = (0..n - 1)
            .map(|i| -self.face[i] / (h2 * (self.weight[i] * self.weight[i + 1]).sqrt()))
            .collect();
        SymTridiag::new(a, b)
    }

    /// Applies the operator to nodal values (zero Dirichlet data beyond the ends).
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.len();
        let h2 = self.h * self.h;
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { g[i + 1] } else { 0.0 };
                let left = if i > 0 { g[i - 1] } else { 0.0 };
                let flux_out = self.face[i] * (right - g[i]);
                let flux_in = self.inner_face(i) * (g[i] - left);
                -(flux_out - flux_in) / (h2 * self.weight[i]) + self.potential[i] * g[i]
            })
            .collect()
    }

    /// `L²(R^d)` inner product of two sector functions.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.measure * self.h * f.iter().zip(g).zip(&self.weight).map(|((a, b), w)| a * b * w).sum::<f64>()
    }

    /// Discrete quadratic form `⟨L g, g⟩` and `‖g‖²_{H¹}` with matching stencils.
    pub fn forms(&self, g: &[f64]) -> (f64, f64) {
        let n = self.len();
        let mut dirichlet = 0.0;
        for i in 0..n {
            let right = if i + 1 < n { g[i + 1] } else { 0.0 };
            dirichlet += self.face[i] * (right - g[i]).powi(2) / self.h;
        }
        if self.sector == Sector::Dipole {
            dirichlet += self.inner_face(0) * g[0] * g[0] / self.h;
        }
        let d = self.dim as f64;
        let centrifugal = if self.sector == Sector::Dipole { d - 1.0 } else { 0.0 };
        let mut pot = 0.0;
        let mut h1_extra = 0.0;
        for i in 0..n {
            let wi = self.weight[i] * self.h * g[i] * g[i];
            pot += self.potential[i] * wi;
            h1_extra += (1.0 + centrifugal / (self.r[i] * self.r[i])) * wi;
        }
        (self.measure * (dirichlet + pot), self.measure * (dirichlet + h1_extra))
    }
}

/// Negative eigenpair, damped rates and kernel residual.
pub fn linearized_spectrum(profile: &RadialProfile, grid: GridSpec) -> Result<SpectralData> {
    if !(grid.h > 0.0 && grid.h <= 0.05) {
        return Err(DnkgError::InvalidInput(format!(
            "spectral step h = {} must lie in (0, 0.05]",
            grid.h
        )));
    }
    if grid.r_max < 15.0 {
        return Err(DnkgError::InvalidInput("spectral box must reach r = 15".into()));
    }
    let radial = SectorOperator::new(profile, grid, Sector::Radial);
    let s = radial.symmetric();
    let negatives = s.count_below(0.0);
    if negatives != 1 {
        return Err(DnkgError::SpectralAnomaly(format!(
            "found {negatives} negative radial eigenvalues, expected exactly one"
        )));
    }
    let lambda0 = s.eigenvalue(0);
    let (rq, y) = s.eigenvector(lambda0, 100)?;
    let mut phi: Vec<f64> = y.iter().zip(&radial.weight).map(|(v, w)| v / w.sqrt()).collect();
    let norm = radial.inner(&phi, &phi).sqrt();
    let sign = if phi[0] < 0.0 { -1.0 } else { 1.0 };
    for v in phi.iter_mut() {
        *v *= sign / norm;
    }
    let second_radial = s.eigenvalue(1);

    let dipole = SectorOperator::new(profile, grid, Sector::Dipole);
    let sd = dipole.symmetric();
    let second_dipole = sd.eigenvalue(1);

    let nu0_sq = -rq;
    let alpha = profile.params.alpha;
    let (nu_plus, nu_minus) = damped_rates(alpha, nu0_sq);
    let kernel_residual = kernel_residual_on(profile, &dipole);

    let mut data = SpectralData {
        schema_version: SPECTRAL_SCHEMA_VERSION,
        grid,
        alpha,
        nu0_sq,
        phi_r: radial.r.clone(),
        phi_grid: phi,
        nu_plus,
        nu_minus,
        kernel_residual,
        second_radial_eigenvalue: second_radial,
        second_dipole_eigenvalue: second_dipole,
        c_l: 0.0,
    };
    data.c_l = estimate_c_l(profile, &data, &radial);
    Ok(data)
}

/// Coercivity constant surrogate. The `L²` gap `λ` above the negative and
/// null directions is converted to an `H¹` constant by interpolating between
/// `⟨Lf,f⟩ ≥ λ‖f‖²` and `⟨Lf,f⟩ ≥ ‖f‖²_{H¹} - p max Q^{p-1} ‖f‖²`, then halved,
/// and shrunk until the compensated inequality holds for φ itself.
fn estimate_c_l(profile: &RadialProfile, data: &SpectralData, radial: &SectorOperator) -> f64 {
    let gap = data.second_radial_eigenvalue.min(data.second_dipole_eigenvalue);
    if gap <= 0.0 {
        return 0.0;
    }
    let pm = profile.params.p * profile.q0.powf(profile.params.p - 1.0);
    let mut c = 0.5 * gap / (gap + pm);
    let (_, phi_h1) = radial.forms(&data.phi_grid);
    while 1.0 / c < data.nu0_sq + c * phi_h1 {
        c *= 0.5;
    }
    c
}

fn kernel_residual_on(profile: &RadialProfile, dipole: &SectorOperator) -> f64 {
    let g: Vec<f64> = dipole.r.iter().map(|r| profile.eval(*r).1).collect();
    let lg = dipole.apply(&g);
    dipole.inner(&lg, &lg).sqrt()
}

/// Discrete `‖L ∂₁Q‖` on a dipole-sector grid of step `h`.
pub fn kernel_check(profile: &RadialProfile, h: f64) -> f64 {
    let grid = GridSpec { h, r_max: profile.r_max };
    kernel_residual_on(profile, &SectorOperator::new(profile, grid, Sector::Dipole))
}

impl SpectralData {
    /// φ(r), interpolated from the cell-centered samples with even reflection.
    pub fn phi(&self, r: f64) -> f64 {
        self.phi_with_derivative(r).0
    }

    /// `(φ(r), φ'(r))` for `r ≥ 0` (use `|x|` on the line).
    pub fn phi_with_derivative(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let h = self.grid.h;
        let n = self.phi_grid.len();
        if r >= self.phi_r[n - 1] {
            return (0.0, 0.0);
        }
        // even reflection: three mirrored nodes prepended at -5h/2, -3h/2, -h/2
        if r < 3.0 * h {
            let mut ext = vec![self.phi_grid[2], self.phi_grid[1], self.phi_grid[0]];
            ext.extend_from_slice(&self.phi_grid[..8]);
            return lagrange_uniform(&ext, -2.5 * h, h, 2, r);
        }
        lagrange_uniform(&self.phi_grid, 0.5 * h, h, 2, r)
    }

    /// φ on the line for d = 1, `(φ(x), φ'(x))`.
    pub fn phi_line(&self, x: f64) -> (f64, f64) {
        let (v, dv) = self.phi_with_derivative(x.abs());
        (v, if x < 0.0 { -dv } else { dv })
    }

    /// φ(0) by even quadratic extrapolation from the two innermost nodes.
    pub fn phi_at_origin(&self) -> f64 {
        (9.0 * self.phi_grid[0] - self.phi_grid[1]) / 8.0
    }

    /// Log-slope of |φ| on `[a, b]`.
    pub fn tail_log_slope(&self, a: f64, b: f64) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .phi_r
            .iter()
            .zip(&self.phi_grid)
            .filter(|(r, v)| **r >= a && **r <= b && v.abs() > 0.0)
            .map(|(r, v)| (*r, v.abs().ln()))
            .unzip();
        crate::numerics::fit::line_fit(&xs, &ys).map(|(_, s)| s)
    }
}

/// Outcome of one coercivity probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub quadratic_form: f64,
    pub h1_norm_sq: f64,
    pub projection_phi: f64,
    pub projection_kernel: f64,
    pub c_l: f64,
    /// `c_L ‖f‖²_{H¹} - (⟨f,φ⟩² + ⟨f,∂₁Q⟩²) / c_L`.
    pub lower_bound: f64,
    pub holds: bool,
}

/// Evaluates `⟨L f, f⟩` for a trial function of the given sector and checks
/// the compensated coercivity inequality. For the dipole sector the trial
/// function is `g(r) x₁/r` and `trial` supplies `g`.
pub fn coercivity_probe<T: Fn(f64) -> f64>(
    profile: &RadialProfile,
    spectral: &SpectralData,
    sector: Sector,
    trial: T,
) -> CoercivityReport {
    let op = SectorOperator::new(profile, spectral.grid, sector);
    let g: Vec<f64> = op.r.iter().map(|r| trial(*r)).collect();
    let (form, h1) = op.forms(&g);
    let (proj_phi, proj_ker) = match sector {
        Sector::Radial => {
            let phi: Vec<f64> = op.r.iter().map(|r| spectral.phi(*r)).collect();
            (op.inner(&g, &phi), 0.0)
        }
        Sector::Dipole => {
            let dq: Vec<f64> = op.r.iter().map(|r| profile.eval(*r).1).collect();
            (0.0, op.inner(&g, &dq))
        }
    };
    let c = spectral.c_l;
    let lower = c * h1 - (proj_phi * proj_phi + proj_ker * proj_ker) / c;
    CoercivityReport {
        quadratic_form: form,
        h1_norm_sq: h1,
        projection_phi: proj_phi,
        projection_kernel: proj_ker,
        c_l: c,
        lower_bound: lower,
        holds: form >= lower - 1e-10 * h1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state;
    use crate::params::ModelParameters;
    use proptest::prelude::*;

    fn cubic_line() -> RadialProfile {
        solve_ground_state(ModelParameters::new(1, 3.0, 1.0).unwrap(), 30.0, 1e-8).unwrap()
    }

    #[test]
    fn poschl_teller_ground_state() {
        let prof = cubic_line();
        let s = linearized_spectrum(&prof, GridSpec::default()).unwrap();
        assert!((s.nu0_sq - 3.0).abs() < 1e-4, "nu0^2 = {}", s.nu0_sq);
        assert!((s.phi_at_origin() - 3f64.sqrt() / 2.0).abs() < 1e-3);
        assert_eq!((s.nu_plus, s.nu_minus), damped_rates(1.0, s.nu0_sq));
        // φ = (√3/2) sech²
        let x: f64 = 1.3;
        let exact = 3f64.sqrt() / 2.0 / x.cosh().powi(2);
        assert!((s.phi(x) - exact).abs() < 1e-4);
    }

    #[test]
    fn kernel_residual_is_second_order() {
        let prof = cubic_line();
        let r1 = kernel_check(&prof, 0.02);
        let r2 = kernel_check(&prof, 0.01);
        assert!(r1 < 1e-3);
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn probes_respect_coercivity() {
        let prof = cubic_line();
        let s = linearized_spectrum(&prof, GridSpec::default()).unwrap();
        let on_phi = coercivity_probe(&prof, &s, Sector::Radial, |r| s.phi(r));
        assert!((on_phi.quadratic_form + s.nu0_sq).abs() < 1e-6);
        assert!(on_phi.holds);
        let on_kernel = coercivity_probe(&prof, &s, Sector::Dipole, |r| prof.eval(r).1);
        assert!(on_kernel.quadratic_form.abs() < 1e-3);
        assert!(on_kernel.holds);
        let bump = coercivity_probe(&prof, &s, Sector::Radial, |r| (-(r - 10.0) * (r - 10.0)).exp());
        assert!(bump.quadratic_form >= 0.9 * bump.h1_norm_sq);
        assert!(bump.holds);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn damped_rate_identities(alpha in 0.01f64..10.0, nu0_sq in 0.01f64..20.0) {
            let (np, nm) = damped_rates(alpha, nu0_sq);
            prop_assert!(np > 0.0 && nm < 0.0);
            prop_assert!((np * nm + nu0_sq).abs() <= 1e-12 * (1.0 + nu0_sq + alpha * alpha));
            prop_assert!((np + nm + 2.0 * alpha).abs() <= 1e-12 * (1.0 + alpha));
        }
    }
}

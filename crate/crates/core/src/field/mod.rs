//! Finite-difference solver for the one-dimensional equation
//! `u_tt - u_xx + 2α u_t + u - |u|^{p-1} u = 0` on `[-L, L]` with
//! homogeneous Dirichlet ends.

mod lattice;

pub use lattice::LatticeSoliton;

use serde::{Deserialize, Serialize};

use crate::error::{DnkgError, Result};
use crate::ground_state::RadialProfile;
use crate::params::ModelParameters;

pub const FIELD_SCHEMA_VERSION: u32 = 1;

/// Width of the strip next to each end where the field must stay negligible.
const BOUNDARY_STRIP: f64 = 1.0;
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// A one-dimensional soliton shape on the line: `(Q(x), Q'(x))`.
pub trait SolitonShape {
    fn value(&self, x: f64) -> (f64, f64);
    /// `Q(0)`.
    fn amplitude(&self) -> f64;
}

impl SolitonShape for RadialProfile {
    fn value(&self, x: f64) -> (f64, f64) {
        self.eval_line(x)
    }

    fn amplitude(&self) -> f64 {
        self.q0
    }
}

/// Uniform grid `x_i = -L + i h`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub half_length: f64,
    pub h: f64,
}

impl FieldGrid {
    pub fn new(half_length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(half_length > 2.0 * h) {
            return Err(DnkgError::InvalidInput(format!(
                "grid needs 0 < 2h < L, got h = {h}, L = {half_length}"
            )));
        }
        let n = 2.0 * half_length / h;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(DnkgError::InvalidInput(format!("2L/h = {n} is not an integer")));
        }
        Ok(Self { half_length, h })
    }

    pub fn len(&self) -> usize {
        (2.0 * self.half_length / self.h).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.x(i))).collect()
    }
}

/// Initial-data perturbation on the grid.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Perturbation {
    pub du: Option<Vec<f64>>,
    pub dv: Option<Vec<f64>>,
}

/// Leapfrog history: `u^{n-1}` and `u^{n+1}` for the current step size.
#[derive(Debug, Clone)]
struct History {
    dt: f64,
    prev: Vec<f64>,
    next: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldState {
    pub schema_version: u32,
    pub params: ModelParameters,
    pub grid: FieldGrid,
    pub u: Vec<f64>,
    /// `∂_t u`, centered difference of the leapfrog levels.
    pub v: Vec<f64>,
    pub t: f64,
    /// `max|u|` above which a step reports blowup.
    pub blowup_limit: f64,
    #[serde(skip)]
    history: Option<History>,
    #[serde(skip)]
    steps: u64,
    #[serde(skip)]
    t_base: f64,
}

impl FieldState {
    pub fn new(params: ModelParameters, grid: FieldGrid, u: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self> {
        params.validate()?;
        if params.d != 1 {
            return Err(DnkgError::InvalidInput(format!(
                "the field solver is one-dimensional, got d = {}",
                params.d
            )));
        }
        let n = grid.len();
        if u.len() != n || v.len() != n {
            return Err(DnkgError::InvalidInput(format!(
                "field arrays must have {n} points, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        let mut state = Self {
            schema_version: FIELD_SCHEMA_VERSION,
            params,
            grid,
            u,
            v,
            t,
            blowup_limit: f64::INFINITY,
            history: None,
            steps: 0,
            t_base: t,
        };
        state.u[0] = 0.0;
        state.u[n - 1] = 0.0;
        state.v[0] = 0.0;
        state.v[n - 1] = 0.0;
        Ok(state)
    }

    pub fn zeros(params: ModelParameters, grid: FieldGrid) -> Result<Self> {
        let n = grid.len();
        Self::new(params, grid, vec![0.0; n], vec![0.0; n], 0.0)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    /// `u_xx - u + f(u)` at interior node `i` from the levels in `u`.
    fn force_at(&self, u: &[f64], i: usize) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 - u[i] + self.params.f(u[i])
    }

    /// Second-order Taylor start for both neighbouring levels.
    fn start_history(&self, dt: f64) -> History {
        let n = self.len();
        let mut prev = vec![0.0; n];
        let mut next = vec![0.0; n];
        let alpha = self.params.alpha;
        for i in 1..n - 1 {
            let acc = self.force_at(&self.u, i) - 2.0 * alpha * self.v[i];
            next[i] = self.u[i] + dt * self.v[i] + 0.5 * dt * dt * acc;
            prev[i] = self.u[i] - dt * self.v[i] + 0.5 * dt * dt * acc;
        }
        History { dt, prev, next }
    }

    /// Advances one step of size `dt`:
    /// `(1 + α dt) u^{n+1} = 2u^n - (1 - α dt) u^{n-1} + dt² (D₂u^n - u^n + f(u^n))`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let limit = 0.8 * self.grid.h;
        if !(dt > 0.0) || dt > limit {
            return Err(DnkgError::CflViolation { dt, limit });
        }
        let fresh = match &self.history {
            Some(hist) => hist.dt != dt,
            None => true,
        };
        if fresh {
            self.history = Some(self.start_history(dt));
            self.t_base = self.t;
            self.steps = 0;
        }
        let mut hist = self.history.take().expect("history initialised above");
        // shift levels: prev <- u^n, u <- u^{n+1}
        std::mem::swap(&mut hist.prev, &mut self.u);
        std::mem::swap(&mut self.u, &mut hist.next);
        let n = self.len();
        let alpha = self.params.alpha;
        let a = 1.0 + alpha * dt;
        let b = 1.0 - alpha * dt;
        let dt2 = dt * dt;
        let mut max_abs: f64 = 0.0;
        for i in 1..n - 1 {
            let rhs = 2.0 * self.u[i] - b * hist.prev[i] + dt2 * self.force_at(&self.u, i);
            hist.next[i] = rhs / a;
            self.v[i] = (hist.next[i] - hist.prev[i]) / (2.0 * dt);
            max_abs = max_abs.max(self.u[i].abs());
        }
        hist.next[0] = 0.0;
        hist.next[n - 1] = 0.0;
        self.history = Some(hist);
        self.steps += 1;
        self.t = self.t_base + self.steps as f64 * dt;
        if !max_abs.is_finite() || max_abs > self.blowup_limit {
            return Err(DnkgError::Blowup { t: self.t, max_abs });
        }
        Ok(())
    }

    /// Edits `(u, v)` in place; the leapfrog restarts from the edited data.
    pub fn modify<F: FnOnce(&mut [f64], &mut [f64])>(&mut self, f: F) {
        f(&mut self.u, &mut self.v);
        let n = self.len();
        self.u[0] = 0.0;
        self.u[n - 1] = 0.0;
        self.v[0] = 0.0;
        self.v[n - 1] = 0.0;
        self.history = None;
    }

    /// `max|u|` in the strips of width 1 next to the ends.
    pub fn boundary_magnitude(&self) -> f64 {
        let k = ((BOUNDARY_STRIP / self.grid.h).round() as usize).max(1);
        let n = self.len();
        (0..=k)
            .chain(n - 1 - k..n)
            .map(|i| self.u[i].abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// `‖v‖²_{L²}` by the trapezoidal rule.
    pub fn velocity_norm_sq(&self) -> f64 {
        trapezoid(self.grid.h, self.v.iter().map(|v| v * v))
    }

    /// `E = ∫ ½v² + ½u_x² + ½u² - F(u)`, gradients by forward differences.
    pub fn energy(&self) -> f64 {
        let h = self.grid.h;
        let local = trapezoid(
            h,
            self.u
                .iter()
                .zip(&self.v)
                .map(|(u, v)| 0.5 * v * v + 0.5 * u * u - self.params.big_f(*u)),
        );
        let grad: f64 = self
            .u
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum::<f64>()
            / h;
        local + 0.5 * grad
    }
}

fn trapezoid<I: Iterator<Item = f64>>(h: f64, vals: I) -> f64 {
    let v: Vec<f64> = vals.collect();
    let n = v.len();
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

/// Free-function form of [`FieldState::step`].
pub fn step(state: &FieldState, dt: f64) -> Result<FieldState> {
    let mut next = state.clone();
    next.step(dt)?;
    Ok(next)
}

pub fn energy(state: &FieldState) -> f64 {
    state.energy()
}

/// `u = Σ σ_k Q(· - z_k)` plus an optional perturbation, `v = 0` plus the
/// optional velocity perturbation.
pub fn initial_multi_soliton(
    params: ModelParameters,
    grid: FieldGrid,
    shape: &dyn SolitonShape,
    sigma: &[i8],
    z0: &[f64],
    perturbation: Option<&Perturbation>,
) -> Result<FieldState> {
    if sigma.len() != z0.len() || sigma.is_empty() {
        return Err(DnkgError::InvalidInput("one sign per center required".into()));
    }
    if sigma.iter().any(|s| *s != 1 && *s != -1) {
        return Err(DnkgError::InvalidInput("signs must be +1 or -1".into()));
    }
    let l = grid.half_length;
    for z in z0 {
        if z.abs() > l - 10.0 {
            return Err(DnkgError::DomainTooSmall(format!(
                "center {z} is not inside [-L+10, L-10] with L = {l}"
            )));
        }
    }
    for i in 0..z0.len() {
        for j in i + 1..z0.len() {
            if (z0[i] - z0[j]).abs() < 6.0 {
                return Err(DnkgError::InvalidInput(format!(
                    "centers {} and {} are closer than 6",
                    z0[i], z0[j]
                )));
            }
        }
    }
    let u = grid.sample(|x| {
        sigma
            .iter()
            .zip(z0)
            .map(|(s, z)| *s as f64 * shape.value(x - z).0)
            .sum()
    });
    let mut state = FieldState::zeros(params, grid)?;
    state.u = u;
    if let Some(p) = perturbation {
        for (target, add) in [(&mut state.u, &p.du), (&mut state.v, &p.dv)] {
            if let Some(add) = add {
                if add.len() != target.len() {
                    return Err(DnkgError::InvalidInput("perturbation has the wrong length".into()));
                }
                target.iter_mut().zip(add).for_each(|(a, b)| *a += b);
            }
        }
    }
    let n = state.len();
    state.u[0] = 0.0;
    state.u[n - 1] = 0.0;
    state.v[0] = 0.0;
    state.v[n - 1] = 0.0;
    state.blowup_limit = 10.0 * shape.amplitude();
    let b = state.boundary_magnitude();
    if b >= BOUNDARY_TOLERANCE {
        return Err(DnkgError::DomainTooSmall(format!(
            "initial field reaches {b:.2e} near the boundary"
        )));
    }
    Ok(state)
}

/// Energy bookkeeping along a run: `E(t)` at samples and the running
/// dissipation `2α ∫‖v‖² dt` (trapezoidal in time, every step).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub times: Vec<f64>,
    /// Energy at the sample, before any snapshot edit.
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// Energy change caused by snapshot edits made before the sample.
    pub injected: Vec<f64>,
}

impl EnergyRecord {
    /// `max_k |E(t_k) - E(t_0) + 2α∫_{t_0}^{t_k} ‖v‖²|`, net of snapshot edits.
    pub fn decay_residual(&self) -> f64 {
        let e0 = self.energy[0];
        let d0 = self.dissipation[0];
        (0..self.energy.len())
            .map(|k| (self.energy[k] - e0 + (self.dissipation[k] - d0) - self.injected[k]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest increase of `E` between consecutive samples.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct FieldRun {
    pub final_state: FieldState,
    pub energy: EnergyRecord,
    /// Largest boundary-strip magnitude seen.
    pub max_boundary: f64,
    /// Set when the snapshot callback asked to stop early.
    pub stopped_early: bool,
}

/// Steps to `t_end`, calling `on_snapshot` every `snapshot_every` time units
/// (and at the start). The callback may edit the state through
/// [`FieldState::modify`] and returns `false` to stop. The run is
/// rejected once the field in the boundary strips exceeds 1e-8.
pub fn simulate<C>(
    mut state: FieldState,
    dt: f64,
    t_end: f64,
    snapshot_every: f64,
    mut on_snapshot: C,
) -> Result<FieldRun>
where
    C: FnMut(&mut FieldState) -> Result<bool>,
{
    let steps = ((t_end - state.t) / dt).round().max(0.0) as u64;
    let every = ((snapshot_every / dt).round() as u64).max(1);
    let alpha = state.params.alpha;
    let mut record = EnergyRecord::default();
    let mut dissipation = 0.0;
    let mut v2_prev = state.velocity_norm_sq();
    record.times.push(state.t);
    record.energy.push(state.energy());
    record.dissipation.push(0.0);
    let mut max_boundary = state.boundary_magnitude();
    let mut injected = 0.0;
    let mut snapshot = |state: &mut FieldState, record: &mut EnergyRecord, v2_prev: &mut f64| -> Result<bool> {
        // the sample is taken before the edit, so only earlier edits count here
        record.injected.push(injected);
        let e = *record.energy.last().unwrap();
        let go = on_snapshot(state)?;
        if state.history.is_none() {
            // edited: account for the energy change and restart the quadrature
            injected += state.energy() - e;
            *v2_prev = state.velocity_norm_sq();
        }
        Ok(go)
    };
    record.injected.clear();
    if !snapshot(&mut state, &mut record, &mut v2_prev)? {
        return Ok(FieldRun {
            final_state: state,
            energy: record,
            max_boundary,
            stopped_early: true,
        });
    }
    for k in 1..=steps {
        state.step(dt)?;
        let v2 = state.velocity_norm_sq();
        dissipation += alpha * dt * (v2 + v2_prev);
        v2_prev = v2;
        if k % every == 0 || k == steps {
            let b = state.boundary_magnitude();
            max_boundary = max_boundary.max(b);
            if b >= BOUNDARY_TOLERANCE {
                return Err(DnkgError::DomainTooSmall(format!(
                    "field reaches {b:.2e} near the boundary at t = {:.3}",
                    state.t
                )));
            }
            record.times.push(state.t);
            record.energy.push(state.energy());
            record.dissipation.push(dissipation);
            if !snapshot(&mut state, &mut record, &mut v2_prev)? {
                return Ok(FieldRun {
                    final_state: state,
                    energy: record,
                    max_boundary,
                    stopped_early: true,
                });
            }
        }
    }
    Ok(FieldRun {
        final_state: state,
        energy: record,
        max_boundary,
        stopped_early: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParameters {
        ModelParameters::new(1, 3.0, 1.0).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut s = FieldState::zeros(params(), FieldGrid::new(10.0, 0.1).unwrap()).unwrap();
        for _ in 0..100 {
            s.step(0.05).unwrap();
        }
        assert!(s.u.iter().chain(&s.v).all(|x| *x == 0.0));
        assert!((s.t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_is_enforced() {
        let mut s = FieldState::zeros(params(), FieldGrid::new(10.0, 0.1).unwrap()).unwrap();
        assert!(matches!(s.step(0.09), Err(DnkgError::CflViolation { .. })));
    }

    #[test]
    fn grid_validation() {
        assert!(FieldGrid::new(10.0, 0.3).is_err());
        assert_eq!(FieldGrid::new(40.0, 0.05).unwrap().len(), 1601);
    }

    #[test]
    fn small_linear_data_loses_energy() {
        let p = params();
        let grid = FieldGrid::new(30.0, 0.1).unwrap();
        let u = grid.sample(|x| 1e-4 * (-x * x).exp());
        let mut s = FieldState::new(p, grid, u, vec![0.0; grid.len()], 0.0).unwrap();
        let mut e_prev = s.energy();
        for k in 0..400 {
            s.step(0.05).unwrap();
            let e = s.energy();
            if k > 0 {
                assert!(e < e_prev, "energy rose at step {k}");
            }
            e_prev = e;
        }
    }
}

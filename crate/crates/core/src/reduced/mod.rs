//! Leading-order center dynamics
//! `ż_k = -Σ_{i≠k} σ_i σ_k 𝓕(|z_k - z_i|) (z_k - z_i)/|z_k - z_i|`.

mod diagnostics;
mod law;

pub use diagnostics::{
    relabel_three, three_soliton_diagnostics, three_soliton_properties, DerivativeSample,
    ThreeSolitonDiagnostics, ThreeSolitonProperties,
};
pub use law::{fit_asymptotic_law, predicted_positions, AsymptoticFit, AsymptoticLaw};

use serde::{Deserialize, Serialize};

use crate::error::{DnkgError, Result};
use crate::interaction::InteractionKernel;
use crate::numerics::dopri::{self, DenseSegment, DopriOptions, DopriStats};

/// Below this separation the asymptotic force law is not meaningful.
pub const SEPARATION_FLOOR: f64 = 2.0;

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonConfiguration {
    pub sigma: Vec<i8>,
    /// One point of `ℝ^d` per soliton.
    pub z: Vec<Vec<f64>>,
    pub t: f64,
}

impl SolitonConfiguration {
    pub fn new(sigma: Vec<i8>, z: Vec<Vec<f64>>, t: f64) -> Result<Self> {
        if sigma.len() < 2 || sigma.len() != z.len() {
            return Err(DnkgError::InvalidInput(format!(
                "need K >= 2 signs matching {} centers, got {}",
                z.len(),
                sigma.len()
            )));
        }
        if sigma.iter().any(|s| *s != 1 && *s != -1) {
            return Err(DnkgError::InvalidInput("signs must be +1 or -1".into()));
        }
        let d = z[0].len();
        if d == 0 || z.iter().any(|p| p.len() != d) {
            return Err(DnkgError::InvalidInput("centers must share one dimension d >= 1".into()));
        }
        if z.iter().flatten().any(|x| !x.is_finite()) {
            return Err(DnkgError::InvalidInput("non-finite center coordinate".into()));
        }
        let config = Self { sigma, z, t };
        let dist = config.min_distance();
        if dist < SEPARATION_FLOOR {
            return Err(DnkgError::SeparationFloor { t, distance: dist });
        }
        Ok(config)
    }

    /// Collinear configuration along the first axis.
    pub fn collinear(sigma: Vec<i8>, positions: &[f64], d: usize) -> Result<Self> {
        let z = positions
            .iter()
            .map(|x| {
                let mut p = vec![0.0; d];
                p[0] = *x;
                p
            })
            .collect();
        Self::new(sigma, z, 0.0)
    }

    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn dim(&self) -> usize {
        self.z[0].len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(&self.z[i], &self.z[j])
    }

    pub fn min_distance(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.k() {
            for j in i + 1..self.k() {
                m = m.min(self.distance(i, j));
            }
        }
        m
    }

    fn flat(&self) -> Vec<f64> {
        self.z.iter().flatten().copied().collect()
    }

    fn from_flat(sigma: &[i8], d: usize, y: &[f64], t: f64) -> Self {
        Self {
            sigma: sigma.to_vec(),
            z: y.chunks(d).map(|c| c.to_vec()).collect(),
            t,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Right-hand side on flattened centers; returns the smallest separation.
fn rhs_flat(kernel: &InteractionKernel, sigma: &[i8], d: usize, y: &[f64], out: &mut [f64]) -> f64 {
    out.iter_mut().for_each(|v| *v = 0.0);
    let k = sigma.len();
    let mut min_dist = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            let za = &y[a * d..(a + 1) * d];
            let zb = &y[b * d..(b + 1) * d];
            let r = dist(za, zb);
            min_dist = min_dist.min(r);
            if r == 0.0 {
                continue;
            }
            // force on a along (z_a - z_b)/r, opposite on b
            let s = -(sigma[a] as f64) * (sigma[b] as f64) * kernel.force(r) / r;
            for l in 0..d {
                let dz = za[l] - zb[l];
                out[a * d + l] += s * dz;
                out[b * d + l] -= s * dz;
            }
        }
    }
    min_dist
}

/// Velocities of all centers under the leading-order interaction.
pub fn center_rhs(config: &SolitonConfiguration, kernel: &InteractionKernel) -> Result<Vec<Vec<f64>>> {
    let d = config.dim();
    if d != kernel.params.d {
        return Err(DnkgError::InvalidInput(format!(
            "configuration lives in d = {d}, kernel in d = {}",
            kernel.params.d
        )));
    }
    let y = config.flat();
    let mut out = vec![0.0; y.len()];
    let m = rhs_flat(kernel, &config.sigma, d, &y, &mut out);
    if m < SEPARATION_FLOOR {
        return Err(DnkgError::SeparationFloor {
            t: config.t,
            distance: m,
        });
    }
    Ok(out.chunks(d).map(|c| c.to_vec()).collect())
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    SeparationFloor { t: f64, distance: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterTrajectory {
    pub schema_version: u32,
    pub times: Vec<f64>,
    pub states: Vec<SolitonConfiguration>,
    pub stats: DopriStats,
    pub tol: f64,
    pub termination: Termination,
    #[serde(skip)]
    segments: Vec<DenseSegment>,
}

impl CenterTrajectory {
    pub fn sigma(&self) -> &[i8] {
        &self.states[0].sigma
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn final_state(&self) -> &SolitonConfiguration {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn has_dense_output(&self) -> bool {
        !self.segments.is_empty()
    }

    /// Segment containing `t`; times within round-off of the ends are clamped.
    fn segment(&self, t: f64) -> Option<&DenseSegment> {
        let (first, last) = (self.segments.first()?, self.segments.last()?);
        let slack = 1e-9 * last.t1().abs().max(1.0);
        if t > last.t1() && t <= last.t1() + slack {
            return Some(last);
        }
        if t < first.t0 && t >= first.t0 - slack {
            return Some(first);
        }
        let i = self.segments.partition_point(|s| s.t1() < t);
        self.segments.get(i).filter(|s| t >= s.t0)
    }

    /// Centers at time `t` from the dense output.
    pub fn positions_at(&self, t: f64) -> Option<Vec<Vec<f64>>> {
        let d = self.dim();
        self.segment(t)
            .map(|s| s.eval(t).chunks(d).map(|c| c.to_vec()).collect())
    }

    /// Time derivative of the dense interpolant at `t`.
    pub fn velocities_at(&self, t: f64) -> Option<Vec<Vec<f64>>> {
        let d = self.dim();
        self.segment(t)
            .map(|s| s.eval_derivative(t).chunks(d).map(|c| c.to_vec()).collect())
    }
}

/// Logarithmically spaced output times in `(t0, t_end]`, plus `t0` itself.
pub fn log_output_times(t0: f64, t_end: f64, per_decade: usize) -> Vec<f64> {
    let mut out = vec![t0];
    let n = per_decade.max(1) as f64;
    let mut j = (-2.0 * n) as i64;
    loop {
        let t = 10f64.powf(j as f64 / n);
        if t >= t_end {
            break;
        }
        if t > t0 {
            out.push(t);
        }
        j += 1;
    }
    if t_end > t0 {
        out.push(t_end);
    }
    out
}

/// Integrates until `t_end` or until the separation floor, returning the
/// trajectory up to that point.
pub fn integrate_centers_partial(
    config0: &SolitonConfiguration,
    kernel: &InteractionKernel,
    t_end: f64,
    tol: f64,
) -> Result<CenterTrajectory> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(DnkgError::InvalidInput(format!("tol = {tol:e} outside [1e-12, 1e-6]")));
    }
    if !(t_end > config0.t) {
        return Err(DnkgError::InvalidInput("t_end must exceed the start time".into()));
    }
    let d = config0.dim();
    // validates dimension and floor
    center_rhs(config0, kernel)?;
    let sigma = config0.sigma.clone();
    let outputs = log_output_times(config0.t, t_end, 20);
    let opts = DopriOptions {
        rtol: tol,
        atol: tol,
        keep_segments: true,
        ..DopriOptions::default()
    };
    let floor_event = |_t: f64, y: &[f64]| {
        let k = y.len() / d;
        let mut m = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                m = m.min(dist(&y[a * d..(a + 1) * d], &y[b * d..(b + 1) * d]));
            }
        }
        m - SEPARATION_FLOOR
    };
    let out = dopri::integrate(
        |_t, y, dy| {
            rhs_flat(kernel, &sigma, d, y, dy);
        },
        config0.t,
        &config0.flat(),
        t_end,
        &outputs,
        &opts,
        Some(floor_event),
    )?;
    let mut times = Vec::with_capacity(out.samples.len() + 1);
    let mut states = Vec::with_capacity(out.samples.len() + 1);
    for (t, y) in &out.samples {
        times.push(*t);
        states.push(SolitonConfiguration::from_flat(&sigma, d, y, *t));
    }
    let termination = match &out.event {
        Some((te, ye)) => {
            if times.last().map_or(true, |t| *t < *te) {
                times.push(*te);
                states.push(SolitonConfiguration::from_flat(&sigma, d, ye, *te));
            }
            Termination::SeparationFloor {
                t: *te,
                distance: floor_event(*te, ye) + SEPARATION_FLOOR,
            }
        }
        None => Termination::Completed,
    };
    Ok(CenterTrajectory {
        schema_version: TRAJECTORY_SCHEMA_VERSION,
        times,
        states,
        stats: out.stats,
        tol,
        termination,
        segments: out.segments,
    })
}

/// Adaptive Dormand–Prince integration of the center system with output at
/// logarithmically spaced times; reaching the separation floor is an error.
pub fn integrate_centers(
    config0: &SolitonConfiguration,
    kernel: &InteractionKernel,
    t_end: f64,
    tol: f64,
) -> Result<CenterTrajectory> {
    let traj = integrate_centers_partial(config0, kernel, t_end, tol)?;
    match traj.termination {
        Termination::Completed => Ok(traj),
        Termination::SeparationFloor { t, distance } => Err(DnkgError::SeparationFloor { t, distance }),
    }
}

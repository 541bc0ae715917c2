//! Three-soliton quantities in the labeling `σ₁ = σ₂ = -σ₃`.

use serde::{Deserialize, Serialize};

use super::{dist, CenterTrajectory};
use crate::error::{DnkgError, Result};
use crate::interaction::InteractionKernel;
use crate::numerics::fit::line_fit;
use crate::params::AnalysisConstants;

/// Original indices of the labels 1, 2, 3, where label 3 carries the odd sign.
pub fn relabel_three(sigma: &[i8]) -> Result<[usize; 3]> {
    if sigma.len() != 3 {
        return Err(DnkgError::InvalidInput(format!("need K = 3, got K = {}", sigma.len())));
    }
    let odd = (0..3).find(|&i| sigma.iter().filter(|s| **s == sigma[i]).count() == 1);
    match odd {
        None => Err(DnkgError::SignPatternUnsupported),
        Some(o) => {
            let mut rest = (0..3).filter(|&i| i != o);
            Ok([rest.next().unwrap(), rest.next().unwrap(), o])
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivativeSample {
    pub t: f64,
    pub d1: f64,
    /// Central difference of `D₁` on the dense output.
    pub finite_difference: f64,
    /// `2𝓕(D₁) + 𝓕(D₂) D₁/D₂ + (𝓕(D₂)/(D₁D₂) + 𝓕(D₀)/(D₀D₁)) Z₀·Z₁`.
    pub analytic: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreeSolitonDiagnostics {
    /// `permutation[j]` is the input index of label `j + 1`.
    pub permutation: [usize; 3],
    pub times: Vec<f64>,
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d_min: Vec<f64>,
    pub d_tilde: Vec<f64>,
    /// `𝓕(D₁) + 𝓕(D₂) - 𝓕(D₀)`.
    pub v: Vec<f64>,
    /// `|z₁ + z₂ - 2z₃|`.
    pub collinearity: Vec<f64>,
    pub center_of_mass: Vec<Vec<f64>>,
    pub derivative_samples: Vec<DerivativeSample>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn analytic_d1_rate(kernel: &InteractionKernel, z: &[&[f64]; 3]) -> f64 {
    let z1v = sub(z[0], z[2]);
    let z0v = sub(z[1], z[0]);
    let (d0, d1, d2) = (dist(z[0], z[1]), dist(z[0], z[2]), dist(z[1], z[2]));
    let f = |r: f64| kernel.force(r);
    2.0 * f(d1)
        + f(d2) * d1 / d2
        + (f(d2) / (d1 * d2) + f(d0) / (d0 * d1)) * dot(&z0v, &z1v)
}

/// Time series of the three-soliton distances, `V`, collinearity and centroid,
/// plus a finite-difference check of `dD₁/dt` at the output times with `D ≥ 10`.
pub fn three_soliton_diagnostics(
    traj: &CenterTrajectory,
    kernel: &InteractionKernel,
) -> Result<ThreeSolitonDiagnostics> {
    let perm = relabel_three(traj.sigma())?;
    let n = traj.times.len();
    let mut diag = ThreeSolitonDiagnostics {
        permutation: perm,
        times: traj.times.clone(),
        d0: Vec::with_capacity(n),
        d1: Vec::with_capacity(n),
        d2: Vec::with_capacity(n),
        d_min: Vec::with_capacity(n),
        d_tilde: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        collinearity: Vec::with_capacity(n),
        center_of_mass: Vec::with_capacity(n),
        derivative_samples: Vec::new(),
    };
    for state in &traj.states {
        let z = [&state.z[perm[0]][..], &state.z[perm[1]][..], &state.z[perm[2]][..]];
        let (d0, d1, d2) = (dist(z[0], z[1]), dist(z[0], z[2]), dist(z[1], z[2]));
        let d_tilde = d1.min(d2);
        diag.d0.push(d0);
        diag.d1.push(d1);
        diag.d2.push(d2);
        diag.d_tilde.push(d_tilde);
        diag.d_min.push(d0.min(d_tilde));
        diag.v.push(kernel.force(d1) + kernel.force(d2) - kernel.force(d0));
        let w: Vec<f64> = (0..z[0].len()).map(|l| z[0][l] + z[1][l] - 2.0 * z[2][l]).collect();
        diag.collinearity.push(dot(&w, &w).sqrt());
        diag.center_of_mass
            .push((0..z[0].len()).map(|l| z[0][l] + z[1][l] + z[2][l]).collect());
    }

    if traj.has_dense_output() {
        let t_last = *traj.times.last().unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            if i == 0 || t >= t_last || diag.d_min[i] < 10.0 {
                continue;
            }
            let delta = 1e-4 * t.max(1.0);
            let (Some(zp), Some(zm), Some(z0)) = (
                traj.positions_at(t + delta),
                traj.positions_at(t - delta),
                traj.positions_at(t),
            ) else {
                continue;
            };
            let d1_of = |z: &Vec<Vec<f64>>| dist(&z[perm[0]], &z[perm[2]]);
            let fd = (d1_of(&zp) - d1_of(&zm)) / (2.0 * delta);
            let zz = [&z0[perm[0]][..], &z0[perm[1]][..], &z0[perm[2]][..]];
            let an = analytic_d1_rate(kernel, &zz);
            diag.derivative_samples.push(DerivativeSample {
                t,
                d1: d1_of(&z0),
                finite_difference: fd,
                analytic: an,
                abs_error: (fd - an).abs(),
            });
        }
    }
    Ok(diag)
}

/// Checks of the long-time properties along one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreeSolitonProperties {
    /// First output time after which `V ≥ ½𝓕(D)` at every later sample.
    pub repulsivity_onset: Option<f64>,
    /// Range of `𝓕(D)(t+1)` over `t ∈ [10², 10⁶]` (clipped to the run).
    pub rate_band: Option<(f64, f64)>,
    /// Final-decade slope of `log|D₁ - D₂|` against `log t`; `None` when
    /// the difference stays at round-off (symmetric runs).
    pub symmetrization_slope: Option<f64>,
    pub symmetrization_threshold: f64,
    /// First output time after which `D₀ - D̃` increases at every sample.
    pub gap_monotone_onset: Option<f64>,
    pub gap_final: f64,
    /// Supremum over `t ≥ 10` of `D - log t + ((d-1)/2) log log t`.
    pub upper_bound_sup: Option<f64>,
    /// Final-decade slope of that quantity against `log t`.
    pub upper_bound_trend: Option<f64>,
    /// `max_t |Σz(t) - Σz(0)|`.
    pub centroid_drift: f64,
    pub collinearity_peak: f64,
    pub collinearity_final: f64,
    /// Final-decade slope of `log|z₁ + z₂ - 2z₃|` against `log t`.
    pub collinearity_slope: Option<f64>,
    pub max_derivative_error: f64,
}

impl ThreeSolitonProperties {
    pub fn upper_bound_holds(&self) -> bool {
        self.upper_bound_trend.is_some_and(|s| s <= 0.01)
    }

    pub fn symmetrization_holds(&self) -> bool {
        self.symmetrization_slope
            .is_some_and(|s| s <= -self.symmetrization_threshold)
    }

    pub fn collinearity_reduction(&self) -> f64 {
        self.collinearity_peak / self.collinearity_final
    }
}

/// Earliest sample index from which `ok` holds through the end.
fn onset(flags: &[bool]) -> Option<usize> {
    if !*flags.last()? {
        return None;
    }
    let mut i = flags.len() - 1;
    while i > 0 && flags[i - 1] {
        i -= 1;
    }
    Some(i)
}

fn final_decade(times: &[f64]) -> Vec<usize> {
    let t_end = *times.last().unwrap();
    (0..times.len())
        .filter(|&i| times[i] >= t_end / 10.0 && times[i] > 0.0)
        .collect()
}

pub fn three_soliton_properties(
    diag: &ThreeSolitonDiagnostics,
    kernel: &InteractionKernel,
    constants: &AnalysisConstants,
) -> ThreeSolitonProperties {
    let times = &diag.times;
    let n = times.len();
    let m = 0.5 * (kernel.params.d as f64 - 1.0);

    let rep: Vec<bool> = (0..n)
        .map(|i| diag.v[i] >= 0.5 * kernel.force(diag.d_min[i]))
        .collect();
    let repulsivity_onset = onset(&rep).map(|i| times[i]);

    let band: Vec<f64> = (0..n)
        .filter(|&i| times[i] >= 1e2 && times[i] <= 1e6)
        .map(|i| kernel.force(diag.d_min[i]) * (times[i] + 1.0))
        .collect();
    let rate_band = if band.is_empty() {
        None
    } else {
        Some((
            band.iter().cloned().fold(f64::INFINITY, f64::min),
            band.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ))
    };

    let last = final_decade(times);
    let slope_of = |vals: &dyn Fn(usize) -> f64| -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = last
            .iter()
            .map(|&i| (times[i].ln(), vals(i)))
            .filter(|(_, y)| y.is_finite())
            .unzip();
        if xs.len() < 3 {
            return None;
        }
        line_fit(&xs, &ys).map(|(_, b)| b)
    };

    let asym_resolved = last
        .iter()
        .all(|&i| (diag.d1[i] - diag.d2[i]).abs() > 1e-12 * diag.d1[i]);
    let symmetrization_slope = if asym_resolved {
        slope_of(&|i| (diag.d1[i] - diag.d2[i]).abs().ln())
    } else {
        None
    };

    let gap: Vec<f64> = (0..n).map(|i| diag.d0[i] - diag.d_tilde[i]).collect();
    let inc: Vec<bool> = (0..n).map(|i| i > 0 && gap[i] > gap[i - 1]).collect();
    let gap_monotone_onset = onset(&inc).map(|i| times[i.saturating_sub(1)]);

    let ub: Vec<(usize, f64)> = (0..n)
        .filter(|&i| times[i] >= 10.0)
        .map(|i| {
            let l = times[i].ln();
            (i, diag.d_min[i] - l + m * l.ln())
        })
        .collect();
    let upper_bound_sup = ub.iter().map(|(_, v)| *v).reduce(f64::max);
    let upper_bound_trend = if times[n - 1] >= 100.0 {
        slope_of(&|i| {
            let l = times[i].ln();
            diag.d_min[i] - l + m * l.ln()
        })
    } else {
        None
    };

    let com0 = &diag.center_of_mass[0];
    let centroid_drift = diag
        .center_of_mass
        .iter()
        .map(|c| dist(c, com0))
        .fold(0.0, f64::max);

    ThreeSolitonProperties {
        repulsivity_onset,
        rate_band,
        symmetrization_slope,
        symmetrization_threshold: 0.5 * constants.theta2,
        gap_monotone_onset,
        gap_final: gap[n - 1],
        upper_bound_sup,
        upper_bound_trend,
        centroid_drift,
        collinearity_peak: diag.collinearity.iter().cloned().fold(0.0, f64::max),
        collinearity_final: diag.collinearity[n - 1],
        collinearity_slope: slope_of(&|i| diag.collinearity[i].ln()),
        max_derivative_error: diag
            .derivative_samples
            .iter()
            .map(|s| s.abs_error)
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relabeling_puts_odd_sign_last() {
        assert_eq!(relabel_three(&[1, -1, 1]).unwrap(), [0, 2, 1]);
        assert_eq!(relabel_three(&[-1, 1, 1]).unwrap(), [1, 2, 0]);
        assert_eq!(relabel_three(&[1, 1, -1]).unwrap(), [0, 1, 2]);
        assert_eq!(relabel_three(&[1, 1, 1]), Err(DnkgError::SignPatternUnsupported));
        assert!(relabel_three(&[1, -1]).is_err());
    }

    #[test]
    fn onset_finds_the_final_run() {
        assert_eq!(onset(&[true, false, true, true]), Some(2));
        assert_eq!(onset(&[true, true]), Some(0));
        assert_eq!(onset(&[true, false]), None);
    }
}

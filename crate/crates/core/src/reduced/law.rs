//! The long-time law `z_k(t) = z_∞ + (k-2)(log t - ((d-1)/2) log log t + c₀) ω_∞`.

use serde::{Deserialize, Serialize};

use super::diagnostics::relabel_three;
use super::{dist, CenterTrajectory};
use crate::error::{DnkgError, Result};
use crate::interaction::InteractionKernel;
use crate::numerics::fit::{line_fit, linear_least_squares};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub z_infty: Vec<f64>,
    pub omega_infty: Vec<f64>,
    pub c0: f64,
    pub d: usize,
}

/// `ℓ(t) = log t - ((d-1)/2) log log t + c₀`.
fn ell(law: &AsymptoticLaw, t: f64) -> f64 {
    let l = t.ln();
    l - 0.5 * (law.d as f64 - 1.0) * l.ln() + law.c0
}

/// The three predicted centers in the law's ordering: the odd-signed soliton
/// is the middle one (`k = 2`) and sits at `z_∞`.
pub fn predicted_positions(law: &AsymptoticLaw, t: f64) -> Result<[Vec<f64>; 3]> {
    if !(t >= std::f64::consts::E + 1.0) {
        return Err(DnkgError::InvalidInput(format!("law needs t >= e + 1, got {t}")));
    }
    let s = ell(law, t);
    let at = |k: f64| -> Vec<f64> {
        law.z_infty
            .iter()
            .zip(&law.omega_infty)
            .map(|(z, w)| z + k * s * w)
            .collect()
    };
    Ok([at(-1.0), at(0.0), at(1.0)])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub law: AsymptoticLaw,
    /// `(t, |z₁ - z₃| - log t + ((d-1)/2) log log t)` in the `σ₁ = σ₂ = -σ₃` labeling.
    pub c0_sequence: Vec<(f64, f64)>,
    /// Last raw value of the sequence.
    pub c0_last: f64,
    /// Distance between the extrapolated and the last raw value.
    pub c0_extrapolation_gap: f64,
    /// `log(c_q c_⋆)`: the constant implied by the force tail for the symmetric run.
    pub log_kappa: f64,
    /// `(t, max_k |z_k - predicted_k|, log log t / log t)` for `t ≥ 10`.
    pub residuals: Vec<(f64, f64, f64)>,
    /// Final-decade slope of the log residual against `log t`.
    pub residual_slope: f64,
    /// `D(t_end) ≥ 2 D(t₀)`.
    pub long_enough: bool,
}

/// Fits `z_∞`, `ω_∞` and `c₀` to a three-soliton trajectory.
pub fn fit_asymptotic_law(traj: &CenterTrajectory, kernel: &InteractionKernel) -> Result<AsymptoticFit> {
    let perm = relabel_three(traj.sigma())?;
    let d = traj.dim();
    let m = 0.5 * (d as f64 - 1.0);
    let t_end = *traj.times.last().unwrap();
    if t_end < 1e3 {
        return Err(DnkgError::InvalidInput(format!(
            "trajectory ends at t = {t_end}; the law needs t_end >= 1e3"
        )));
    }
    let last_decade: Vec<usize> = (0..traj.times.len())
        .filter(|&i| traj.times[i] >= t_end / 10.0)
        .collect();
    let z = |i: usize, label: usize| -> &[f64] { &traj.states[i].z[perm[label]] };

    let c0_sequence: Vec<(f64, f64)> = traj
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t >= 10.0)
        .map(|(i, &t)| {
            let l = t.ln();
            (t, dist(z(i, 0), z(i, 2)) - l + m * l.ln())
        })
        .collect();
    // final decade; in d = 1 the remainder is a series in 1/t, otherwise
    // the log log t / log t correction dominates
    let (ts, vs): (Vec<f64>, Vec<f64>) = c0_sequence
        .iter()
        .filter(|(t, _)| *t >= t_end / 10.0)
        .cloned()
        .unzip();
    let basis = |t: f64| {
        let l = t.ln();
        if d > 1 {
            vec![1.0, 1.0 / t, l.ln() / l, 1.0 / l]
        } else {
            vec![1.0, 1.0 / t, 1.0 / (t * t)]
        }
    };
    let nb = if d > 1 { 4 } else { 3 };
    let (coef, _) = linear_least_squares(&ts, &vs, nb, basis)
        .ok_or_else(|| DnkgError::FitDiverged("c0 extrapolation is singular".into()))?;
    let c0_last = *vs.last().unwrap();
    let c0 = coef[0];

    // z₃ → z_∞ with a 1/t transient
    let z_infty: Vec<f64> = (0..d)
        .map(|l| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = last_decade
                .iter()
                .map(|&i| (1.0 / traj.times[i], z(i, 2)[l]))
                .unzip();
            line_fit(&xs, &ys).map_or(*ys.last().unwrap(), |(a, _)| a)
        })
        .collect();
    let mut omega = vec![0.0; d];
    for &i in &last_decade {
        let diff: Vec<f64> = (0..d).map(|l| z(i, 0)[l] - z(i, 2)[l]).collect();
        let n = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
        for l in 0..d {
            omega[l] += diff[l] / n;
        }
    }
    let norm = omega.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(DnkgError::FitDiverged("no mean direction for the outer pair".into()));
    }
    omega.iter_mut().for_each(|x| *x /= norm);
    let law = AsymptoticLaw {
        z_infty,
        omega_infty: omega,
        c0,
        d,
    };

    // label 1 ↦ k = 3, label 2 ↦ k = 1, label 3 ↦ k = 2
    let mut residuals = Vec::new();
    for (i, &t) in traj.times.iter().enumerate() {
        if t < 10.0 {
            continue;
        }
        let pred = predicted_positions(&law, t)?;
        let r = dist(z(i, 0), &pred[2])
            .max(dist(z(i, 1), &pred[0]))
            .max(dist(z(i, 2), &pred[1]));
        let l = t.ln();
        residuals.push((t, r, l.ln() / l));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = residuals
        .iter()
        .filter(|(t, r, _)| *t >= t_end / 10.0 && *r > 0.0)
        .map(|(t, r, _)| (t.ln(), r.ln()))
        .unzip();
    let residual_slope = if xs.len() >= 3 {
        line_fit(&xs, &ys).map_or(0.0, |(_, b)| b)
    } else {
        0.0
    };
    let (_, r_final, env_final) = *residuals.last().unwrap();
    if residual_slope > 0.05 && r_final > env_final {
        return Err(DnkgError::FitDiverged(format!(
            "residual grows like t^{residual_slope:.3} and exceeds the envelope ({r_final:.3e} > {env_final:.3e})"
        )));
    }

    let d_of = |i: usize| {
        dist(z(i, 0), z(i, 1))
            .min(dist(z(i, 0), z(i, 2)))
            .min(dist(z(i, 1), z(i, 2)))
    };
    let long_enough = d_of(traj.times.len() - 1) >= 2.0 * d_of(0);
    Ok(AsymptoticFit {
        law,
        c0_last,
        c0_extrapolation_gap: (c0 - c0_last).abs(),
        c0_sequence,
        log_kappa: kernel.kappa.ln(),
        residuals,
        residual_slope,
        long_enough,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_middle_is_fixed_and_outer_antipodal() {
        let law = AsymptoticLaw {
            z_infty: vec![0.5, -1.0],
            omega_infty: vec![0.6, 0.8],
            c0: 0.75,
            d: 2,
        };
        for t in [4.0, 1e3, 1e9] {
            let [a, b, c] = predicted_positions(&law, t).unwrap();
            assert_eq!(b, law.z_infty);
            for l in 0..2 {
                assert!((a[l] + c[l] - 2.0 * b[l]).abs() < 1e-12);
            }
        }
        assert!(predicted_positions(&law, 2.0).is_err());
    }

    #[test]
    fn one_dimension_has_no_log_log_term() {
        let law = AsymptoticLaw {
            z_infty: vec![0.0],
            omega_infty: vec![1.0],
            c0: 0.3,
            d: 1,
        };
        let t: f64 = 1e5;
        let [_, _, c] = predicted_positions(&law, t).unwrap();
        assert!((c[0] - (t.ln() + 0.3)).abs() < 1e-12);
    }
}

//! Trend monitors for the unstable projections and the remainder size along a tracked run.

use serde::{Deserialize, Serialize};

use super::ModulationRecord;
use crate::interaction::InteractionKernel;
use crate::numerics::fit::line_fit;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub times: Vec<f64>,
    /// `|a⁺|² / (‖ε⃗‖² + 𝓕(D))`.
    pub a_plus_ratio: Vec<f64>,
    /// `‖ε⃗‖ / 𝓕(D)`.
    pub eps_over_force: Vec<f64>,
    /// `‖ε⃗‖ t`.
    pub eps_times_t: Vec<f64>,
    /// Slope of `log` ratio against `log t` over the final half of the run (unflagged, positive entries).
    pub a_plus_trend: Option<f64>,
    /// Same for `‖ε⃗‖²/𝓕(D)` over the final decade.
    pub eps_sq_force_trend: Option<f64>,
    /// `sup ‖ε⃗‖/𝓕(D)` over unflagged records after the first.
    pub eps_force_constant: f64,
    pub eps_times_t_sup: f64,
    pub flagged: usize,
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(t, y)| *t > 0.0 && *y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    line_fit(&xs, &ys).map(|(_, b)| b)
}

pub fn instability_monitor(records: &[ModulationRecord], kernel: &InteractionKernel) -> InstabilityReport {
    let mut times = Vec::with_capacity(records.len());
    let mut a_plus_ratio = Vec::new();
    let mut eps_over_force = Vec::new();
    let mut eps_times_t = Vec::new();
    let mut flagged = 0;
    for r in records {
        let f = kernel.force(r.min_distance());
        let a2: f64 = r.a_plus.iter().map(|a| a * a).sum();
        times.push(r.t);
        a_plus_ratio.push(a2 / (r.eps_norm * r.eps_norm + f));
        eps_over_force.push(r.eps_norm / f);
        eps_times_t.push(r.eps_norm * r.t);
        flagged += r.smallness_violated as usize;
    }
    let usable = |i: usize| !records[i].smallness_violated;
    let t_end = times.last().copied().unwrap_or(0.0);
    let half: Vec<(f64, f64)> = (0..records.len())
        .filter(|&i| usable(i) && times[i] >= 0.5 * t_end)
        .map(|i| (times[i], a_plus_ratio[i]))
        .collect();
    let decade: Vec<(f64, f64)> = (0..records.len())
        .filter(|&i| usable(i) && times[i] >= 0.1 * t_end)
        .map(|i| (times[i], eps_over_force[i] * records[i].eps_norm))
        .collect();
    let sup = |v: &[f64]| {
        (1..v.len())
            .filter(|&i| usable(i))
            .map(|i| v[i])
            .fold(0.0f64, f64::max)
    };
    InstabilityReport {
        a_plus_trend: slope(&half),
        eps_sq_force_trend: slope(&decade),
        eps_force_constant: sup(&eps_over_force),
        eps_times_t_sup: sup(&eps_times_t),
        times,
        a_plus_ratio,
        eps_over_force,
        eps_times_t,
        flagged,
    }
}

/// Exponential growth rate of `|a_k⁺|` fitted over `t_min ≤ t ≤ t_max`.
pub fn a_plus_growth_rate(records: &[ModulationRecord], k: usize, t_min: f64, t_max: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.t >= t_min && r.t <= t_max && r.a_plus[k] != 0.0)
        .map(|r| (r.t, r.a_plus[k].abs().ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    line_fit(&xs, &ys).map(|(_, b)| b)
}

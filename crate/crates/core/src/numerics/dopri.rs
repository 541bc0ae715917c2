//! Dormand–Prince 5(4) integrator with step-size control, dense output and
//! a sign-change event.

use crate::error::{DnkgError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct DopriOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Keep every accepted step's interpolant.
    pub keep_segments: bool,
}

impl Default for DopriOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
            keep_segments: false,
        }
    }
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    r: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        (0..self.r[0].len())
            .map(|i| {
                self.r[0][i]
                    + th * (self.r[1][i]
                        + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])))
            })
            .collect()
    }

    /// Time derivative of the interpolant.
    pub fn eval_derivative(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        (0..self.r[0].len())
            .map(|i| {
                let (r1, r2, r3, r4) = (self.r[1][i], self.r[2][i], self.r[3][i], self.r[4][i]);
                // y = r0 + θ r1 + θ(1-θ) r2 + θ²(1-θ) r3 + θ²(1-θ)² r4
                let d = r1
                    + (1.0 - 2.0 * th) * r2
                    + (2.0 * th - 3.0 * th * th) * r3
                    + (2.0 * th - 6.0 * th * th + 4.0 * th * th * th) * r4;
                d / self.h
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct DopriStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub max_error_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DopriOutput {
    /// `(t, y)` at each requested output time that was reached.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub t_final: f64,
    pub y_final: Vec<f64>,
    pub stats: DopriStats,
    pub segments: Vec<DenseSegment>,
    /// Located root of the event function, when it fired.
    pub event: Option<(f64, Vec<f64>)>,
}

fn axpy(y: &[f64], terms: &[(f64, &[f64])], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut s = y[i];
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = s;
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, sampling at `outputs`
/// (sorted, inside `[t0, t_end]`). Integration stops early, with the root
/// located on the dense output, when `event(t, y)` changes sign from
/// nonnegative to negative.
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    outputs: &[f64],
    opts: &DopriOptions,
    mut event: Option<G>,
) -> Result<DopriOutput>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> f64,
{
    let n = y0.len();
    let mut stats = DopriStats::default();
    let mut samples = Vec::with_capacity(outputs.len());
    let mut segments = Vec::new();
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        samples.push((outputs[next_out], y0.to_vec()));
        next_out += 1;
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    stats.evaluations += 1;

    let scale = |a: &[f64], b: &[f64], i: usize| opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let d0 = (0..n).map(|i| (y[i] / scale(&y, &y, i)).powi(2)).sum::<f64>().sqrt();
            let d1 = (0..n).map(|i| (k1[i] / scale(&y, &y, i)).powi(2)).sum::<f64>().sqrt();
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * k1[i]).collect();
            let mut f1 = vec![0.0; n];
            f(t + h0, &y1, &mut f1);
            stats.evaluations += 1;
            let d2 = (0..n)
                .map(|i| ((f1[i] - k1[i]) / scale(&y, &y, i)).powi(2))
                .sum::<f64>()
                .sqrt()
                / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    }
    .min(opts.h_max)
    .min(t_end - t0);

    let mut event_prev = event.as_mut().map(|g| g(t, &y));
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut facold: f64;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(DnkgError::NonConvergence(format!(
                "step budget of {} exhausted at t = {t:.6e}",
                opts.max_steps
            )));
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(DnkgError::StepUnderflow { t, h });
        }

        axpy(&y, &[(h * A21, &k1)], &mut ytmp);
        f(t + C2 * h, &ytmp, &mut k2);
        axpy(&y, &[(h * A31, &k1), (h * A32, &k2)], &mut ytmp);
        f(t + C3 * h, &ytmp, &mut k3);
        axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)], &mut ytmp);
        f(t + C4 * h, &ytmp, &mut k4);
        axpy(
            &y,
            &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)],
            &mut ytmp,
        );
        f(t + C5 * h, &ytmp, &mut k5);
        axpy(
            &y,
            &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
            &mut ytmp,
        );
        f(t + h, &ytmp, &mut k6);
        axpy(
            &y,
            &[(h * A71, &k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)],
            &mut ynew,
        );
        f(t + h, &ynew, &mut k7);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = scale(&y, &ynew, i);
            err += (e / sk).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(0.17);
        if err <= 1.0 {
            stats.max_error_ratio = stats.max_error_ratio.max(err);
            let ydiff: Vec<f64> = (0..n).map(|i| ynew[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k1[i] - ydiff[i]).collect();
            let seg = DenseSegment {
                t0: t,
                h,
                r: [
                    y.clone(),
                    ydiff.clone(),
                    bspl.clone(),
                    (0..n).map(|i| ydiff[i] - h * k7[i] - bspl[i]).collect(),
                    (0..n)
                        .map(|i| {
                            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                        })
                        .collect(),
                ],
            };
            let t_new = t + h;

            let mut fired = None;
            if let (Some(g), Some(prev)) = (event.as_mut(), event_prev) {
                let now = g(t_new, &ynew);
                if prev >= 0.0 && now < 0.0 {
                    let (mut lo, mut hi) = (t, t_new);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if g(mid, &seg.eval(mid)) < 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    fired = Some((hi, seg.eval(hi)));
                }
                event_prev = Some(now);
            }

            let stop = fired.as_ref().map(|e| e.0).unwrap_or(f64::INFINITY);
            while next_out < outputs.len() && outputs[next_out] <= t_new && outputs[next_out] <= stop {
                let to = outputs[next_out];
                let yo = if to == t_new { ynew.clone() } else { seg.eval(to) };
                samples.push((to, yo));
                next_out += 1;
            }
            stats.accepted += 1;
            if opts.keep_segments {
                segments.push(seg);
            }
            if let Some((te, ye)) = fired {
                return Ok(DopriOutput {
                    samples,
                    t_final: te,
                    y_final: ye.clone(),
                    stats,
                    segments,
                    event: Some((te, ye)),
                });
            }

            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut ynew);
            t = t_new;
            facold = err.max(1e-4);
            let mut fac = fac11 / facold.powf(0.04);
            fac = (fac / 0.9).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            h = hnew.min(opts.h_max);
            last_rejected = false;
        } else {
            h /= (fac11 / 0.9).min(5.0);
            stats.rejected += 1;
            last_rejected = true;
        }
    }

    Ok(DopriOutput {
        samples,
        t_final: t,
        y_final: y,
        stats,
        segments,
        event: None,
    })
}

/// Convenience for callers without an event function.
pub type NoEvent = fn(f64, &[f64]) -> f64;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let opts = DopriOptions { rtol: 1e-10, atol: 1e-14, ..Default::default() };
        let out = integrate(
            |_t, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            5.0,
            &[1.0, 2.5, 5.0],
            &opts,
            None::<NoEvent>,
        )
        .unwrap();
        for (t, y) in &out.samples {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = DopriOptions { rtol: 1e-10, atol: 1e-12, keep_segments: true, ..Default::default() };
        let outs: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
        let out = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &outs,
            &opts,
            None::<NoEvent>,
        )
        .unwrap();
        assert_eq!(out.samples.len(), outs.len());
        for (t, y) in &out.samples {
            assert!((y[0] - t.sin()).abs() < 1e-8);
        }
        for seg in &out.segments {
            let tm = seg.t0 + 0.37 * seg.h;
            let dy = seg.eval_derivative(tm);
            assert!((dy[0] - tm.cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn event_is_located() {
        let opts = DopriOptions::default();
        let out = integrate(
            |_t, _y, dy| dy[0] = -1.0,
            0.0,
            &[3.0],
            10.0,
            &[],
            &opts,
            Some(|_t: f64, y: &[f64]| y[0] - 1.0),
        )
        .unwrap();
        let (te, _) = out.event.unwrap();
        assert!((te - 2.0).abs() < 1e-9);
    }
}

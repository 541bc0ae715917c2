//! Acceptance criteria. Each test prints one PASS/FAIL line per check and
//! fails if any of its checks fails.

use std::f64::consts::SQRT_2;
use std::io::Write;
use std::time::Instant;

use dnkg_core::ground_state::{ground_state_constants, solve_ground_state, RadialProfile};
use dnkg_core::modulation::{hamiltonian_expansion_check, run_tracked, TrackTermination, TrackedRunOptions};
use dnkg_core::reduced::{integrate_centers_partial, Termination};
use dnkg_core::spectral::damped_rates;
use dnkg_core::{
    fit_asymptotic_law, integrate_centers, linearized_spectrum, CenterTrajectory, GridSpec, InteractionKernel,
    LatticeSoliton, ModelParameters, SolitonConfiguration,
};

struct Report {
    criterion: u32,
    failed: Vec<String>,
}

impl Report {
    fn new(criterion: u32) -> Self {
        Self { criterion, failed: Vec::new() }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        // written to the raw handle so the line survives test output capture
        let _ = writeln!(std::io::stderr(), "{tag} criterion {}: {name}: {detail}", self.criterion);
        if !pass {
            self.failed.push(name.to_string());
        }
    }

    fn finish(self) {
        assert!(self.failed.is_empty(), "criterion {} failed: {:?}", self.criterion, self.failed);
    }
}

fn cubic_line() -> ModelParameters {
    ModelParameters::new(1, 3.0, 1.0).unwrap()
}

fn profile() -> RadialProfile {
    solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn min_distance(z: &[Vec<f64>]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            d = d.min(dist(&z[i], &z[j]));
        }
    }
    d
}

#[test]
fn criterion_1_ground_state() {
    let mut r = Report::new(1);
    let clock = Instant::now();
    let prof = profile();
    let secs = clock.elapsed().as_secs_f64();
    let err = prof
        .r_grid
        .iter()
        .zip(&prof.q_values)
        .map(|(x, q)| (q - SQRT_2 / x.cosh()).abs())
        .fold(0.0, f64::max);
    r.check("max grid error vs √2 sech r < 1e-8", err < 1e-8, format!("{err:.3e}"));
    // the criterion pins this literal
    #[allow(clippy::approx_constant)]
    r.check(
        "q(0) = 1.4142136 ± 1e-7",
        (prof.q0 - 1.4142136).abs() <= 1e-7,
        format!("{:.10}", prof.q0),
    );
    r.check("runtime < 1 s", secs < 1.0, format!("{secs:.3} s"));
    r.finish();
}

#[test]
fn criterion_2_constants() {
    let mut r = Report::new(2);
    let prof = profile();
    let c = ground_state_constants(&prof);
    let k = InteractionKernel::build(&prof).unwrap();
    let close = |x: f64, y: f64, tol: f64| (x - y).abs() <= tol;
    r.check("c_q = 2√2 ± 1e-4", close(c.c_q, 2.0 * SQRT_2, 1e-4), format!("{:.8}", c.c_q));
    r.check("‖∂Q‖² = 4/3 ± 1e-6", close(c.grad_norm_sq, 4.0 / 3.0, 1e-6), format!("{:.10}", c.grad_norm_sq));
    r.check("E(Q,0) = 4/3 ± 1e-6", close(c.energy, 4.0 / 3.0, 1e-6), format!("{:.10}", c.energy));
    r.check("c_g (quadrature) = 4√2 ± 1e-3", close(k.c_g, 4.0 * SQRT_2, 1e-3), format!("{:.8}", k.c_g));
    r.check("c_g (tail fit) = 4√2 ± 1e-3", close(k.c_g_tail, 4.0 * SQRT_2, 1e-3), format!("{:.8}", k.c_g_tail));
    r.check("c_⋆ = 3√2/2 ± 2e-3", close(k.c_star, 1.5 * SQRT_2, 2e-3), format!("{:.8}", k.c_star));
    r.finish();
}

#[test]
fn criterion_3_spectrum() {
    let mut r = Report::new(3);
    let prof = profile();
    let coarse = linearized_spectrum(&prof, GridSpec { h: 0.04, r_max: 30.0 }).unwrap();
    let fine = linearized_spectrum(&prof, GridSpec { h: 0.02, r_max: 30.0 }).unwrap();
    r.check(
        "ν₀² = 3 ± 1e-4 at h = 0.02",
        (fine.nu0_sq - 3.0).abs() <= 1e-4,
        format!("{:.9}", fine.nu0_sq),
    );
    let ratio = (coarse.nu0_sq - 3.0) / (fine.nu0_sq - 3.0);
    r.check("ν₀² error ratio under halving ≈ 4", (3.5..=4.5).contains(&ratio), format!("{ratio:.4}"));
    // ν± = -α ± √(α² + ν₀²) with α = 1, ν₀² = 3
    let (p, m) = damped_rates(1.0, 3.0);
    r.check("(ν⁺, ν⁻) = (1, -3) exactly", p == 1.0 && m == -3.0, format!("({p}, {m})"));
    let kr = coarse.kernel_residual / fine.kernel_residual;
    r.check("kernel residual ratio under halving ≈ 4", (3.0..=5.0).contains(&kr), format!("{kr:.4}"));
    r.finish();
}

fn flagship_ode(k: &InteractionKernel) -> (CenterTrajectory, f64) {
    let start = SolitonConfiguration::collinear(vec![1, -1, 1], &[-10.0, 0.0, 10.0], 1).unwrap();
    let clock = Instant::now();
    let traj = integrate_centers(&start, k, 1e6, 1e-10).unwrap();
    (traj, clock.elapsed().as_secs_f64())
}

#[test]
fn criterion_4_reduced_log_law() {
    let mut r = Report::new(4);
    let prof = profile();
    let k = InteractionKernel::build(&prof).unwrap();
    let (traj, secs) = flagship_ode(&k);
    r.check("runtime < 10 s", secs < 10.0, format!("{secs:.3} s"));
    let target = (1.5 * SQRT_2).ln();
    match fit_asymptotic_law(&traj, &k) {
        Ok(fit) => r.check(
            "fitted c₀ = log(3√2/2) ± 0.1",
            (fit.law.c0 - target).abs() <= 0.1,
            format!("{:.5} vs {target:.5}", fit.law.c0),
        ),
        Err(e) => r.check("fitted c₀ = log(3√2/2) ± 0.1", false, e.to_string()),
    }
    let band: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| (1e2..=1e6).contains(*t))
        .map(|(t, s)| (*t, k.force(min_distance(&s.z)) * (t + 1.0)))
        .collect();
    let lo = band.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let hi = band.iter().map(|b| b.1).fold(0.0, f64::max);
    r.check(
        "𝓕(D)(t+1) ∈ [0.2, 5] on [1e2, 1e6]",
        !band.is_empty() && lo >= 0.2 && hi <= 5.0,
        format!("range [{lo:.4}, {hi:.4}] over {} samples", band.len()),
    );
    // bounded above: the excess D - log t does not grow over the final decade
    let (xs, ys): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= 1e5)
        .map(|(t, s)| (t.ln(), min_distance(&s.z) - t.ln()))
        .unzip();
    let sup = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= 10.0)
        .map(|(t, s)| min_distance(&s.z) - t.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let s = slope(&xs, &ys);
    r.check(
        "D - log t bounded above",
        sup.is_finite() && s <= 0.01,
        format!("sup {sup:.4}, final-decade slope {s:.4}"),
    );
    r.finish();
}

#[test]
fn criterion_5_collinearization() {
    let mut r = Report::new(5);
    let prof = solve_ground_state(ModelParameters::new(2, 3.0, 1.0).unwrap(), 30.0, 1e-8).unwrap();
    let k = InteractionKernel::build(&prof).unwrap();
    // the middle-sign soliton sits at the apex
    let start = SolitonConfiguration::new(
        vec![1, -1, 1],
        vec![vec![-10.0, 0.0], vec![0.0, 2.0], vec![10.0, 0.0]],
        0.0,
    )
    .unwrap();
    let traj = integrate_centers(&start, &k, 1e6, 1e-10).unwrap();
    let w: Vec<f64> = traj
        .states
        .iter()
        .map(|s| {
            let v: Vec<f64> = (0..2).map(|l| s.z[0][l] + s.z[2][l] - 2.0 * s.z[1][l]).collect();
            (v[0] * v[0] + v[1] * v[1]).sqrt()
        })
        .collect();
    let peak = w.iter().cloned().fold(0.0, f64::max);
    let last = *w.last().unwrap();
    r.check(
        "|z₁+z₂-2z₃| drops ≥ 10× from its peak",
        peak >= 10.0 * last,
        format!("initial {:.4}, peak {peak:.4}, final {last:.4}", w[0]),
    );

    let d1: Vec<f64> = traj.states.iter().map(|s| dist(&s.z[0], &s.z[1])).collect();
    let d2: Vec<f64> = traj.states.iter().map(|s| dist(&s.z[2], &s.z[1])).collect();
    let d0: Vec<f64> = traj.states.iter().map(|s| dist(&s.z[0], &s.z[2])).collect();
    let t_end = *traj.times.last().unwrap();
    let decade: Vec<usize> = (0..traj.times.len()).filter(|&i| traj.times[i] >= 0.1 * t_end).collect();
    let asym: Vec<f64> = decade.iter().map(|&i| (d1[i] - d2[i]).abs()).collect();
    let at_roundoff = decade.iter().all(|&i| (d1[i] - d2[i]).abs() <= 1e-10 * d1[i]);
    // θ⋆ = min(p - 1, 2) = 2, θ₁ = (1 + θ⋆)/2, θ₂ = (θ₁ - 1)/2
    let theta1 = (1.0 + 2.0) / 2.0;
    let theta2_half = 0.5 * (theta1 - 1.0) / 2.0;
    let (pass, detail) = if at_roundoff {
        (true, format!("|D₁-D₂| at round-off ({:.2e})", asym.iter().cloned().fold(0.0, f64::max)))
    } else {
        let xs: Vec<f64> = decade.iter().map(|&i| traj.times[i].ln()).collect();
        let ys: Vec<f64> = asym.iter().map(|a| a.ln()).collect();
        let s = slope(&xs, &ys);
        (s <= -theta2_half, format!("slope {s:.4}"))
    };
    r.check("|D₁-D₂| final-decade log-log slope ≤ -θ₂/2", pass, detail);

    // onset: first sample after which the property holds at every later sample
    let onset = |ok: &dyn Fn(usize) -> bool| -> Option<f64> {
        let n = traj.times.len();
        let mut first = None;
        for i in (0..n).rev() {
            if ok(i) {
                first = Some(traj.times[i]);
            } else {
                break;
            }
        }
        first.filter(|t| *t < 0.1 * t_end)
    };
    let gap = |i: usize| d0[i] - d1[i].min(d2[i]);
    let inc = onset(&|i| i > 0 && gap(i) > gap(i - 1));
    r.check("D₀ - D̃ increases monotonically after onset", inc.is_some(), format!("onset {inc:?}"));
    let rep = onset(&|i| {
        let v = k.force(d1[i]) + k.force(d2[i]) - k.force(d0[i]);
        v >= 0.5 * k.force(d1[i].min(d2[i]))
    });
    r.check("V ≥ ½𝓕(D) after onset", rep.is_some(), format!("onset {rep:?}"));
    r.finish();
}

fn lattice(prof: &RadialProfile, h: f64) -> LatticeSoliton {
    LatticeSoliton::new(prof, h).unwrap()
}

#[test]
fn criterion_6_field_against_reduced() {
    let mut r = Report::new(6);
    let prof = profile();
    let k = InteractionKernel::build(&prof).unwrap();
    let z0 = [-8.0, 0.0, 8.0];
    let sigma = [1, -1, 1];
    let opts = TrackedRunOptions::default();
    let run = run_tracked(&lattice(&prof, 0.05), &sigma, &z0, &opts, None).unwrap();
    let start = SolitonConfiguration::collinear(sigma.to_vec(), &z0, 1).unwrap();
    let ode = integrate_centers(&start, &k, 2000.0, 1e-10).unwrap();
    let mut dev: f64 = 0.0;
    for rec in &run.records {
        match ode.positions_at(rec.t) {
            Some(z) => {
                for (a, b) in z.iter().zip(&rec.z_tilde) {
                    dev = dev.max((a[0] - b).abs());
                }
            }
            None => dev = f64::INFINITY,
        }
    }
    let completed = run.termination == TrackTermination::Completed;
    r.check(
        "tracked centers within 0.1 of the reduced ODE for t ≤ 2000",
        completed && dev <= 0.1,
        format!("max deviation {dev:.3e}, {:?}", run.termination),
    );

    let mut res = Vec::new();
    for (h, dt) in [(0.1, 0.04), (0.05, 0.02), (0.025, 0.01)] {
        let o = TrackedRunOptions { dt, t_end: 100.0, ..opts };
        let run = run_tracked(&lattice(&prof, h), &sigma, &z0, &o, None).unwrap();
        res.push(run.energy.decay_residual());
    }
    let ratios = [res[0] / res[1], res[1] / res[2]];
    r.check(
        "energy identity residual shrinks ≈ 4× per halving",
        ratios.iter().all(|x| (3.0..=5.0).contains(x)),
        format!("residuals {:?}, ratios {ratios:.3?}", res.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()),
    );

    let t_end = opts.t_end;
    let late: Vec<_> = run.records.iter().filter(|x| x.t >= 0.5 * t_end).collect();
    let mid = late.first().map_or(f64::NAN, |x| x.eps_norm * x.t);
    let sup = late.iter().map(|x| x.eps_norm * x.t).fold(0.0, f64::max);
    r.check(
        "‖ε⃗‖·t bounded (final-half sup ≤ 2× value at T/2)",
        sup <= 2.0 * mid,
        format!("value at T/2 {mid:.4}, final-half sup {sup:.4}"),
    );

    let (xs, ys): (Vec<f64>, Vec<f64>) = late
        .iter()
        .map(|x| {
            let a2 = x.a_plus.iter().map(|a| a * a).fold(0.0, f64::max);
            let ratio = a2 / (x.eps_norm * x.eps_norm + k.force(x.min_distance()));
            (x.t.ln(), ratio.ln())
        })
        .unzip();
    let s = slope(&xs, &ys);
    r.check("|a⁺|²/(‖ε⃗‖²+𝓕(D)) trends downward over the final half", s < 0.0, format!("log-log slope {s:.4}"));
    r.finish();
}

#[test]
fn criterion_7_same_sign_collapse() {
    let mut r = Report::new(7);
    let prof = profile();
    let k = InteractionKernel::build(&prof).unwrap();
    for (name, sigma, pos) in [
        ("same-sign pair", vec![1, 1], vec![-5.0, 5.0]),
        ("same-sign triple", vec![1, 1, 1], vec![-10.0, 0.0, 10.0]),
    ] {
        let start = SolitonConfiguration::collinear(sigma, &pos, 1).unwrap();
        let traj = integrate_centers_partial(&start, &k, 1e6, 1e-10).unwrap();
        r.check(
            &format!("{name} ODE ends at SeparationFloor"),
            matches!(traj.termination, Termination::SeparationFloor { .. }),
            format!("{:?}", traj.termination),
        );
    }
    let opts = TrackedRunOptions { t_end: 1000.0, ..Default::default() };
    let run = run_tracked(&lattice(&prof, 0.05), &[1, 1], &[-4.0, 4.0], &opts, None).unwrap();
    let ds: Vec<f64> = run.records.iter().map(|x| x.min_distance()).collect();
    let decreasing = ds.len() > 2 && ds.windows(2).all(|w| w[1] < w[0] + 1e-9);
    let diverged = matches!(run.termination, TrackTermination::NewtonDiverged { .. });
    r.check(
        "same-sign pair field run: D decreases, then NewtonDiverged",
        decreasing && diverged,
        format!("D {:.4} → {:.4}, {:?}", ds[0], ds.last().unwrap(), run.termination),
    );
    r.finish();
}

#[test]
fn criterion_8_hamiltonian_expansion() {
    let mut r = Report::new(8);
    let prof = profile();
    let k = InteractionKernel::build(&prof).unwrap();
    let seps = [10.0, 12.0, 14.0, 16.0];
    let ham = hamiltonian_expansion_check(&prof, &k, -1, &seps).unwrap();
    let cs: Vec<f64> = seps
        .iter()
        .zip(&ham.residuals)
        .map(|(d, res)| res.abs() * d / k.force(*d))
        .collect();
    // least squares for |res| ≈ C D⁻¹ 𝓕(D)
    let basis: Vec<f64> = seps.iter().map(|d| k.force(*d) / d).collect();
    let fitted = basis.iter().zip(&ham.residuals).map(|(b, res)| b * res.abs()).sum::<f64>()
        / basis.iter().map(|b| b * b).sum::<f64>();
    let stable = cs.iter().all(|c| (c - fitted).abs() <= 0.5 * fitted);
    r.check(
        "C(D) stable to ±50% across D ∈ {10, 12, 14, 16}",
        stable,
        format!("C(D) = {:?}, fitted {fitted:.3e}", cs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()),
    );
    r.finish();
}

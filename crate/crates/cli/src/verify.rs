//! The acceptance table behind `verify-theorem`.

use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use dnkg_core::ground_state::{ground_state_constants, solve_ground_state};
use dnkg_core::interaction::InteractionKernel;
use dnkg_core::modulation::{hamiltonian_expansion_check, instability_monitor, run_tracked, TrackTermination};
use dnkg_core::reduced::{
    fit_asymptotic_law, integrate_centers_partial, three_soliton_diagnostics, three_soliton_properties,
    SolitonConfiguration, Termination,
};
use dnkg_core::spectral::{damped_rates, linearized_spectrum, GridSpec};
use dnkg_core::{AnalysisConstants, LatticeSoliton, ModelParameters};

use crate::commands::{run_pde, tracked_options, Exit};
use crate::config::RunConfig;
use crate::output::{header, Outputs};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub status: &'static str,
    pub measured: String,
    pub expected: String,
}

#[derive(Default)]
struct Table {
    rows: Vec<Check>,
    timings: Vec<(String, f64)>,
}

impl Table {
    fn push(&mut self, criterion: u32, name: &str, pass: bool, measured: String, expected: &str) {
        self.rows.push(Check {
            criterion,
            name: name.to_string(),
            status: if pass { "PASS" } else { "FAIL" },
            measured,
            expected: expected.to_string(),
        });
    }

    fn skip(&mut self, criterion: u32, name: &str, why: &str) {
        self.rows.push(Check {
            criterion,
            name: name.to_string(),
            status: "SKIP",
            measured: why.to_string(),
            expected: String::new(),
        });
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn collinear_config(sigma: &[i8], pos: &[f64]) -> Result<SolitonConfiguration> {
    Ok(SolitonConfiguration::collinear(sigma.to_vec(), pos, 1)?)
}

pub fn verify_theorem(cfg: &RunConfig, out: &Outputs) -> Result<Exit> {
    let mut t = Table::default();
    let params = ModelParameters::new(1, 3.0, 1.0)?;
    let sqrt2 = std::f64::consts::SQRT_2;

    // 1. ground state
    let clock = Instant::now();
    let prof = solve_ground_state(params, cfg.ground_state.r_max, cfg.ground_state.tol)?;
    let secs = clock.elapsed().as_secs_f64();
    t.timings.push(("ground_state".into(), secs));
    let grid_err = prof
        .r_grid
        .iter()
        .zip(&prof.q_values)
        .map(|(r, q)| (q - sqrt2 / r.cosh()).abs())
        .fold(0.0, f64::max);
    t.push(1, "max |q - √2 sech r|", grid_err < 1e-8, format!("{grid_err:.3e}"), "< 1e-8");
    // the criterion pins this literal
    #[allow(clippy::approx_constant)]
    t.push(1, "q(0)", within(prof.q0, 1.4142136, 1e-7), format!("{:.9}", prof.q0), "1.4142136 ± 1e-7");
    t.push(1, "runtime", secs < 1.0, "see timings.json".into(), "< 1 s");

    // 2. constants
    let c = ground_state_constants(&prof);
    let k = InteractionKernel::build(&prof)?;
    t.push(2, "c_q", within(c.c_q, 2.0 * sqrt2, 1e-4), format!("{:.7}", c.c_q), "2√2 ± 1e-4");
    let four_thirds = 4.0 / 3.0;
    t.push(2, "‖∂Q‖²", within(c.grad_norm_sq, four_thirds, 1e-6), format!("{:.9}", c.grad_norm_sq), "4/3 ± 1e-6");
    t.push(2, "E(Q,0)", within(c.energy, four_thirds, 1e-6), format!("{:.9}", c.energy), "4/3 ± 1e-6");
    t.push(2, "c_g quadrature", within(k.c_g, 4.0 * sqrt2, 1e-3), format!("{:.6}", k.c_g), "4√2 ± 1e-3");
    t.push(2, "c_g tail fit", within(k.c_g_tail, 4.0 * sqrt2, 1e-3), format!("{:.6}", k.c_g_tail), "4√2 ± 1e-3");
    t.push(2, "c_⋆", within(k.c_star, 1.5 * sqrt2, 2e-3), format!("{:.6}", k.c_star), "3√2/2 ± 2e-3");

    // 3. spectrum
    let coarse = linearized_spectrum(&prof, GridSpec { h: 0.04, r_max: 30.0 })?;
    let fine = linearized_spectrum(&prof, GridSpec { h: 0.02, r_max: 30.0 })?;
    t.push(3, "ν₀² at h = 0.02", within(fine.nu0_sq, 3.0, 1e-4), format!("{:.8}", fine.nu0_sq), "3 ± 1e-4");
    let ratio = (coarse.nu0_sq - 3.0).abs() / (fine.nu0_sq - 3.0).abs();
    t.push(3, "ν₀² convergence ratio", (3.5..=4.5).contains(&ratio), format!("{ratio:.3}"), "≈ 4 (second order)");
    let rates = damped_rates(1.0, 3.0);
    t.push(3, "(ν⁺, ν⁻)", rates == (1.0, -3.0), format!("({}, {})", rates.0, rates.1), "(1, -3) exactly");
    let kr = coarse.kernel_residual / fine.kernel_residual;
    t.push(3, "kernel residual ratio", (3.0..=5.0).contains(&kr), format!("{kr:.3}"), "≈ 4 (O(h²))");

    // 4. collinear reduced run
    let flagship = collinear_config(&[1, -1, 1], &[-10.0, 0.0, 10.0])?;
    let clock = Instant::now();
    let traj = integrate_centers_partial(&flagship, &k, 1e6, cfg.ode.tol)?;
    let secs = clock.elapsed().as_secs_f64();
    t.timings.push(("ode_flagship".into(), secs));
    t.push(4, "runtime", secs < 10.0, "see timings.json".into(), "< 10 s");
    let constants = AnalysisConstants::new(3.0);
    let diag = three_soliton_diagnostics(&traj, &k)?;
    let props = three_soliton_properties(&diag, &k, &constants);
    let target = (1.5 * sqrt2).ln();
    match fit_asymptotic_law(&traj, &k) {
        Ok(fit) => t.push(4, "fitted c₀", within(fit.law.c0, target, 0.1), format!("{:.4}", fit.law.c0), "log(3√2/2) = 0.7520 ± 0.1"),
        Err(e) => t.push(4, "fitted c₀", false, e.to_string(), "log(3√2/2) = 0.7520 ± 0.1"),
    }
    let band_ok = props.rate_band.is_some_and(|(lo, hi)| lo >= 0.2 && hi <= 5.0);
    t.push(4, "𝓕(D)(t+1) on [1e2, 1e6]", band_ok, format!("{:?}", props.rate_band), "within [0.2, 5]");
    t.push(
        4,
        "D - log t bounded above",
        props.upper_bound_holds(),
        format!("sup {:?}, trend {:?}", props.upper_bound_sup, props.upper_bound_trend),
        "final-decade trend ≤ 0.01",
    );

    // 5. triangle start
    let h = cfg.verify.triangle_offset;
    let tri = SolitonConfiguration::new(
        vec![1, -1, 1],
        vec![vec![-10.0, 0.0], vec![0.0, h], vec![10.0, 0.0]],
        0.0,
    )?;
    let prof2 = solve_ground_state(ModelParameters::new(2, 3.0, 1.0)?, cfg.ground_state.r_max, cfg.ground_state.tol)?;
    let k2 = InteractionKernel::build(&prof2)?;
    let traj2 = integrate_centers_partial(&tri, &k2, 1e6, cfg.ode.tol)?;
    let diag2 = three_soliton_diagnostics(&traj2, &k2)?;
    let p2 = three_soliton_properties(&diag2, &k2, &constants);
    t.push(
        5,
        "|z₁+z₂-2z₃| reduction from peak",
        p2.collinearity_reduction() >= 10.0,
        format!("{:.3} (peak {:.3}, final {:.3})", p2.collinearity_reduction(), p2.collinearity_peak, p2.collinearity_final),
        "≥ 10",
    );
    // a mirror-symmetric start keeps D₁ = D₂ to round-off, which is symmetrization already
    let asym = diag2
        .d1
        .iter()
        .zip(&diag2.d2)
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0, f64::max);
    t.push(
        5,
        "|D₁-D₂| final-decade slope",
        p2.symmetrization_holds() || asym <= 1e-10,
        format!("slope {:?}, max |D₁-D₂|/D₁ {asym:.2e}", p2.symmetrization_slope),
        "≤ -θ₂/2, or |D₁-D₂| at round-off",
    );
    t.push(5, "D₀ - D̃ monotone after onset", p2.gap_monotone_onset.is_some(), format!("onset {:?}", p2.gap_monotone_onset), "onset exists");
    t.push(5, "V ≥ ½𝓕(D) after onset", p2.repulsivity_onset.is_some(), format!("onset {:?}", p2.repulsivity_onset), "onset exists");

    // 7. same-sign collapse (reduced)
    for (name, sigma, pos) in [
        ("same-sign pair", vec![1, 1], vec![-5.0, 5.0]),
        ("same-sign triple", vec![1, 1, 1], vec![-10.0, 0.0, 10.0]),
    ] {
        let traj = integrate_centers_partial(&collinear_config(&sigma, &pos)?, &k, 1e6, cfg.ode.tol)?;
        let floor = matches!(traj.termination, Termination::SeparationFloor { .. });
        t.push(7, &format!("{name} ODE"), floor, format!("{:?}", traj.termination), "SeparationFloor");
    }

    // 8. Hamiltonian expansion
    let ham = hamiltonian_expansion_check(&prof, &k, -1, &cfg.verify.hamiltonian_separations)?;
    t.push(
        8,
        "C(D) stable across separations",
        ham.stable,
        format!("C(D) = {:?}, fitted {:.3e}", ham.c_per_separation.iter().map(|c| format!("{c:.2e}")).collect::<Vec<_>>(), ham.c_fitted),
        "each within ±50% of fitted C",
    );

    if cfg.verify.include_pde {
        pde_checks(cfg, &prof, &k, &mut t)?;
    } else {
        t.skip(6, "PDE-ODE cross-validation", "include_pde = false");
        t.skip(7, "same-sign pair PDE", "include_pde = false");
    }
    t.rows.sort_by_key(|r| r.criterion);
    write_table(out, cfg, &t)
}

fn pde_checks(cfg: &RunConfig, prof: &dnkg_core::RadialProfile, k: &InteractionKernel, t: &mut Table) -> Result<()> {
    // 6. flagship field run against the reduced dynamics
    let mut flag = cfg.clone();
    flag.pde = crate::config::PdeConfig::default();
    let clock = Instant::now();
    let (run, _) = run_pde(&flag, prof, k)?;
    t.timings.push(("pde_flagship".into(), clock.elapsed().as_secs_f64()));
    let start = collinear_config(&flag.pde.sigma, &flag.pde.positions)?;
    let ode = integrate_centers_partial(&start, k, flag.pde.t_end, 1e-10)?;
    let mut dev: f64 = 0.0;
    for r in &run.records {
        if let Some(z) = ode.positions_at(r.t) {
            for (a, b) in z.iter().zip(&r.z_tilde) {
                dev = dev.max((a[0] - b).abs());
            }
        } else {
            dev = f64::INFINITY;
        }
    }
    let completed = run.termination == TrackTermination::Completed;
    t.push(6, "max |z̃ - z_ODE|, t ≤ 2000", completed && dev <= 0.1, format!("{dev:.3e} ({:?})", run.termination), "≤ 0.1");

    let mut residuals = Vec::new();
    for (h, dt) in [(0.1, 0.04), (0.05, 0.02), (0.025, 0.01)] {
        let lat = LatticeSoliton::new(prof, h)?;
        let mut o = tracked_options(&flag);
        o.dt = dt;
        o.t_end = cfg.verify.convergence_t_end;
        let r = run_tracked(&lat, &flag.pde.sigma, &flag.pde.positions, &o, None)?;
        residuals.push(r.energy.decay_residual());
    }
    let ratios = [residuals[0] / residuals[1], residuals[1] / residuals[2]];
    t.push(
        6,
        "energy-identity residual ratio under (h, dt) halving",
        ratios.iter().all(|r| (3.0..=5.0).contains(r)),
        format!("residuals {:?}, ratios {ratios:.3?}", residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>()),
        "≈ 4",
    );
    let m = instability_monitor(&run.records, k);
    let t_end = flag.pde.t_end;
    let at_half = run
        .records
        .iter()
        .find(|r| r.t >= 0.5 * t_end)
        .map_or(f64::NAN, |r| r.eps_norm * r.t);
    let late_sup = run
        .records
        .iter()
        .filter(|r| r.t >= 0.5 * t_end)
        .map(|r| r.eps_norm * r.t)
        .fold(0.0, f64::max);
    t.push(
        6,
        "‖ε⃗‖·t bounded",
        late_sup <= 2.0 * at_half,
        format!("sup over final half {late_sup:.3}, at T/2 {at_half:.3}"),
        "final-half sup ≤ 2× value at T/2",
    );
    t.push(
        6,
        "|a⁺|²/(‖ε⃗‖²+𝓕(D)) trend over final half",
        m.a_plus_trend.is_some_and(|s| s < 0.0),
        format!("{:?}", m.a_plus_trend),
        "negative log-log slope",
    );

    // 7. same-sign pair in the field
    let mut pair = cfg.clone();
    pair.pde = crate::config::RunConfig::preset("same-sign-pair")?.pde;
    let (run, _) = run_pde(&pair, prof, k)?;
    let ds: Vec<f64> = run.records.iter().map(|r| r.min_distance()).collect();
    let decreasing = ds.windows(2).all(|w| w[1] < w[0] + 1e-9);
    let diverged = matches!(run.termination, TrackTermination::NewtonDiverged { .. });
    t.push(
        7,
        "same-sign pair PDE",
        decreasing && diverged,
        format!("D {:.3} → {:.3}, {:?}", ds[0], ds.last().copied().unwrap_or(f64::NAN), run.termination),
        "D decreasing, then NewtonDiverged",
    );
    Ok(())
}

fn write_table(out: &Outputs, cfg: &RunConfig, t: &Table) -> Result<Exit> {
    let failed = t.rows.iter().filter(|r| r.status == "FAIL").count();
    out.json("summary.json", "verify-theorem", &json!({ "checks": t.rows, "failed": failed }))?;
    let rows: Vec<Vec<f64>> = t
        .rows
        .iter()
        .map(|r| vec![r.criterion as f64, (r.status == "PASS") as u8 as f64])
        .collect();
    out.csv("checks.csv", &header(&["criterion", "pass"]), &rows)?;
    let timings: serde_json::Map<String, serde_json::Value> =
        t.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    out.json("timings.json", "verify-theorem", &timings)?;
    let mut md = String::from("schema_version: 1\n\n| # | check | status | measured | expected |\n|---|---|---|---|---|\n");
    for r in &t.rows {
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            r.criterion, r.name, r.status, r.measured, r.expected
        ));
    }
    out.text("checks.md", &md)?;
    out.config(cfg)?;
    for r in &t.rows {
        println!("{} [{}] {}: {} (expected {})", r.status, r.criterion, r.name, r.measured, r.expected);
    }
    Ok(if failed > 0 { Exit::ChecksFailed } else { Exit::Success })
}

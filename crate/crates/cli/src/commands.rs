//! Subcommand bodies. Each writes a JSON summary, CSV series and the resolved config.

use anyhow::{bail, Result};
use serde_json::json;

use dnkg_core::ground_state::{decay_constant, ground_state_constants, solve_ground_state, RadialProfile};
use dnkg_core::interaction::{asymptotic_c0, time_scale_g, InteractionKernel};
use dnkg_core::modulation::{
    calibrate_weights, hamiltonian_expansion_check, instability_monitor, run_tracked, LyapunovSettings,
    ModulationBasis, TrackTermination, TrackedRun, TrackedRunOptions,
};
use dnkg_core::reduced::{
    fit_asymptotic_law, integrate_centers_partial, relabel_three, three_soliton_diagnostics,
    three_soliton_properties, CenterTrajectory, SolitonConfiguration, Termination,
};
use dnkg_core::spectral::{linearized_spectrum, GridSpec};
use dnkg_core::{AnalysisConstants, FieldGrid, LatticeSoliton};

use crate::config::RunConfig;
use crate::output::{header, Outputs};

/// Process outcome other than an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    SeparationFloor,
    NewtonDiverged,
    ChecksFailed,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Exit::Success => 0,
            Exit::SeparationFloor => 3,
            Exit::NewtonDiverged => 4,
            Exit::ChecksFailed => 5,
        }
    }
}

pub fn profile(cfg: &RunConfig) -> Result<RadialProfile> {
    Ok(solve_ground_state(cfg.params(), cfg.ground_state.r_max, cfg.ground_state.tol)?)
}

pub fn ground_state(cfg: &RunConfig, out: &Outputs) -> Result<Exit> {
    let prof = profile(cfg)?;
    let constants = ground_state_constants(&prof);
    let decay = decay_constant(&prof)?;
    out.json(
        "summary.json",
        "ground-state",
        &json!({
            "params": prof.params,
            "q0": prof.q0,
            "c_q": prof.c_q,
            "r_trust": prof.r_trust,
            "ode_residual_max": prof.ode_residual_max(),
            "constants": constants,
            "decay_fit": decay,
        }),
    )?;
    let rows: Vec<Vec<f64>> = (0..prof.r_grid.len())
        .map(|i| vec![prof.r_grid[i], prof.q_values[i], prof.q_prime_values[i]])
        .collect();
    out.csv("profile.csv", &header(&["r", "q", "q_prime"]), &rows)?;
    out.config(cfg)?;
    println!("q(0) = {:.10}  c_q = {:.10}", prof.q0, prof.c_q);
    Ok(Exit::Success)
}

pub fn spectrum(cfg: &RunConfig, out: &Outputs) -> Result<Exit> {
    let prof = profile(cfg)?;
    let grid = GridSpec {
        h: cfg.spectrum.h,
        r_max: cfg.spectrum.r_max,
    };
    let spec = linearized_spectrum(&prof, grid)?;
    out.json(
        "summary.json",
        "spectrum",
        &json!({
            "params": prof.params,
            "grid": spec.grid,
            "nu0_sq": spec.nu0_sq,
            "nu_plus": spec.nu_plus,
            "nu_minus": spec.nu_minus,
            "kernel_residual": spec.kernel_residual,
            "second_radial_eigenvalue": spec.second_radial_eigenvalue,
            "second_dipole_eigenvalue": spec.second_dipole_eigenvalue,
            "c_l": spec.c_l,
        }),
    )?;
    let rows: Vec<Vec<f64>> = spec
        .phi_r
        .iter()
        .zip(&spec.phi_grid)
        .map(|(r, p)| vec![*r, *p])
        .collect();
    out.csv("phi.csv", &header(&["r", "phi"]), &rows)?;
    out.config(cfg)?;
    println!("nu0^2 = {:.8}  (nu+, nu-) = ({:.8}, {:.8})", spec.nu0_sq, spec.nu_plus, spec.nu_minus);
    Ok(Exit::Success)
}

pub fn kernel(cfg: &RunConfig) -> Result<(RadialProfile, InteractionKernel)> {
    let prof = profile(cfg)?;
    let k = InteractionKernel::build(&prof)?;
    Ok((prof, k))
}

pub fn interaction(cfg: &RunConfig, out: &Outputs) -> Result<Exit> {
    let (_, k) = kernel(cfg)?;
    let c0 = asymptotic_c0(&k).map_err(|e| e.to_string());
    out.json(
        "summary.json",
        "interaction",
        &json!({
            "params": k.params,
            "c_g_quadrature": k.c_g,
            "c_g_tail_fit": k.c_g_tail,
            "c_star": k.c_star,
            "kappa": k.kappa,
            "constants": k.constants,
            "c0": c0.as_ref().ok(),
            "c0_error": c0.as_ref().err(),
        }),
    )?;
    let mut rows = Vec::new();
    let mut r = k.options.r_min;
    while r <= k.options.r_tab + 1e-9 {
        rows.push(vec![r, k.g(r), k.force(r), time_scale_g(&k, r)]);
        r += k.options.step;
    }
    out.csv("kernel.csv", &header(&["r", "g", "force", "time_scale"]), &rows)?;
    out.config(cfg)?;
    println!("c_g = {:.8}  c_star = {:.8}  kappa = {:.8}", k.c_g, k.c_star, k.kappa);
    Ok(Exit::Success)
}

pub fn run_ode(cfg: &RunConfig, k: &InteractionKernel) -> Result<CenterTrajectory> {
    let start = SolitonConfiguration::new(cfg.ode.sigma.clone(), cfg.ode.positions.clone(), 0.0)?;
    Ok(integrate_centers_partial(&start, k, cfg.ode.t_end, cfg.ode.tol)?)
}

pub fn trajectory_rows(traj: &CenterTrajectory) -> (Vec<String>, Vec<Vec<f64>>) {
    let (kk, d) = (traj.sigma().len(), traj.dim());
    let mut head = vec!["t".to_string()];
    for i in 0..kk {
        for l in 0..d {
            head.push(format!("z{}_{}", i + 1, l + 1));
        }
    }
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| std::iter::once(*t).chain(s.z.iter().flatten().copied()).collect())
        .collect();
    (head, rows)
}

pub fn ode_sim(cfg: &RunConfig, out: &Outputs) -> Result<Exit> {
    let (_, k) = kernel(cfg)?;
    let traj = run_ode(cfg, &k)?;
    let mut summary = json!({
        "params": k.params,
        "termination": traj.termination,
        "stats": traj.stats,
        "final_time": traj.times.last(),
        "final_state": traj.final_state(),
    });
    let three = traj.sigma().len() == 3 && relabel_three(traj.sigma()).is_ok();
    if three && traj.termination == Termination::Completed {
        let diag = three_soliton_diagnostics(&traj, &k)?;
        let props = three_soliton_properties(&diag, &k, &AnalysisConstants::new(cfg.p));
        summary["properties"] = serde_json::to_value(&props)?;
        if cfg.ode.t_end >= 1e3 {
            summary["asymptotic_fit"] = match fit_asymptotic_law(&traj, &k) {
                Ok(fit) => json!({
                    "law": fit.law,
                    "c0_last": fit.c0_last,
                    "c0_extrapolation_gap": fit.c0_extrapolation_gap,
                    "log_kappa": fit.log_kappa,
                    "residual_slope": fit.residual_slope,
                    "long_enough": fit.long_enough,
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
        }
    }
    out.json("summary.json", "ode-sim", &summary)?;
    let (head, rows) = trajectory_rows(&traj);
    out.csv("trajectory.csv", &head, &rows)?;
    out.config(cfg)?;
    match traj.termination {
        Termination::Completed => {
            println!("completed t = {:e} ({} steps)", cfg.ode.t_end, traj.stats.accepted);
            Ok(Exit::Success)
        }
        Termination::SeparationFloor { t, distance } => {
            eprintln!("separation floor reached at t = {t:.6e} (distance {distance:.4})");
            Ok(Exit::SeparationFloor)
        }
    }
}

pub fn tracked_options(cfg: &RunConfig) -> TrackedRunOptions {
    TrackedRunOptions {
        half_length: cfg.pde.half_length,
        dt: cfg.pde.dt,
        t_end: cfg.pde.t_end,
        snapshot_every: cfg.pde.snapshot_every,
        stabilize: cfg.pde.stabilize,
        unstable_seed: cfg.pde.unstable_seed,
        ..Default::default()
    }
}

/// Lattice soliton, calibrated Lyapunov settings and the tracked run.
pub fn run_pde(cfg: &RunConfig, prof: &RadialProfile, k: &InteractionKernel) -> Result<(TrackedRun, serde_json::Value)> {
    if cfg.d != 1 {
        bail!("d: the field solver is one-dimensional");
    }
    let lat = LatticeSoliton::new(prof, cfg.pde.h)?;
    let basis = ModulationBasis::lattice(&lat);
    let cal = calibrate_weights(
        &basis,
        FieldGrid::new(20.0, cfg.pde.h)?,
        cfg.seed,
        cfg.pde.calibration_probes,
    )?;
    let ham = hamiltonian_expansion_check(prof, k, -1, &cfg.verify.hamiltonian_separations)?;
    let settings = LyapunovSettings {
        mu: cal.mu,
        l_weight: cal.l_weight,
        c_ast: ham.c_ast,
    };
    let run = run_tracked(&lat, &cfg.pde.sigma, &cfg.pde.positions, &tracked_options(cfg), Some((k, settings)))?;
    let header = json!({
        "lattice_nu0_sq": lat.nu0_sq,
        "lattice_amplitude": lat.values[lat.values.len() / 2],
        "rng": "ChaCha8",
        "seed": cal.seed,
        "mu": cal.mu,
        "l_weight": cal.l_weight,
        "c1_tilde": cal.c1_tilde,
        "c2_tilde": cal.c2_tilde,
        "c_ast": ham.c_ast,
    });
    Ok((run, header))
}

pub fn record_rows(run: &TrackedRun) -> (Vec<String>, Vec<Vec<f64>>) {
    let kk = run.sigma.len();
    let mut head = vec!["t".to_string()];
    for name in ["z", "a_plus", "a_minus", "b"] {
        for i in 0..kk {
            head.push(format!("{name}{}", i + 1));
        }
    }
    for name in [
        "eps_norm",
        "orthogonality_residual",
        "smallness_violated",
        "energy",
        "cal_e",
        "cal_g",
        "v",
        "hamiltonian_residual",
    ] {
        head.push(name.to_string());
    }
    let rows = run
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.t];
            row.extend(&r.z_tilde);
            row.extend(&r.a_plus);
            row.extend(&r.a_minus);
            row.extend(&r.b);
            row.extend([r.eps_norm, r.orthogonality_residual, r.smallness_violated as u8 as f64]);
            match run.lyapunov.get(i) {
                Some(l) => row.extend([l.e_total, l.cal_e, l.cal_g, l.v, l.hamiltonian_residual]),
                None => row.extend([f64::NAN; 5]),
            }
            row
        })
        .collect();
    (head, rows)
}

pub fn pde_sim(cfg: &RunConfig, out: &Outputs) -> Result<Exit> {
    let (prof, k) = kernel(cfg)?;
    let (run, calibration) = run_pde(cfg, &prof, &k)?;
    let monitor = instability_monitor(&run.records, &k);
    out.json(
        "summary.json",
        "pde-sim",
        &json!({
            "params": k.params,
            "termination": run.termination,
            "calibration": calibration,
            "energy_decay_residual": (!run.energy.times.is_empty()).then(|| run.energy.decay_residual()),
            "max_boundary": run.max_boundary,
            "final_centers": run.records.last().map(|r| &r.z_tilde),
            "monitor": {
                "a_plus_trend": monitor.a_plus_trend,
                "eps_sq_force_trend": monitor.eps_sq_force_trend,
                "eps_force_constant": monitor.eps_force_constant,
                "eps_times_t_sup": monitor.eps_times_t_sup,
                "flagged": monitor.flagged,
            },
        }),
    )?;
    let (head, rows) = record_rows(&run);
    out.csv("records.csv", &head, &rows)?;
    let e = &run.energy;
    let rows: Vec<Vec<f64>> = (0..e.times.len())
        .map(|i| vec![e.times[i], e.energy[i], e.dissipation[i], e.injected[i]])
        .collect();
    out.csv("energy.csv", &header(&["t", "energy", "dissipation", "injected"]), &rows)?;
    out.config(cfg)?;
    match run.termination {
        TrackTermination::Completed => {
            println!("completed t = {} ({} snapshots)", cfg.pde.t_end, run.records.len());
            Ok(Exit::Success)
        }
        TrackTermination::NewtonDiverged { t, residual } => {
            eprintln!("modulation regime left at t = {t:.4} (Newton residual {residual:.3e})");
            Ok(Exit::NewtonDiverged)
        }
    }
}

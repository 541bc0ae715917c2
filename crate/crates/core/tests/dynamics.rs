use dnkg_core::ground_state::solve_ground_state;
use dnkg_core::modulation::{a_plus_growth_rate, run_tracked, ModulationBasis, TrackedRunOptions};
use dnkg_core::reduced::integrate_centers_partial;
use dnkg_core::{InteractionKernel, LatticeSoliton, ModelParameters, SolitonConfiguration};

fn cubic_line() -> ModelParameters {
    ModelParameters::new(1, 3.0, 1.0).unwrap()
}

#[test]
fn opposite_pair_follows_the_scalar_separation_law() {
    let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
    let k = InteractionKernel::build(&prof).unwrap();
    let start = SolitonConfiguration::collinear(vec![1, -1], &[-5.0, 5.0], 1).unwrap();
    let traj = integrate_centers_partial(&start, &k, 1e4, 1e-11).unwrap();

    // oracle: D' = 2𝓕(D) by classical RK4 with a fixed step
    let rhs = |d: f64| 2.0 * k.force(d);
    let (mut d, dt) = (10.0, 0.25);
    let mut t = 0.0;
    for &target in [1e2, 1e3, 1e4].iter() {
        while t < target - 1e-9 {
            let k1 = rhs(d);
            let k2 = rhs(d + 0.5 * dt * k1);
            let k3 = rhs(d + 0.5 * dt * k2);
            let k4 = rhs(d + dt * k3);
            d += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        let z = traj.positions_at(target).unwrap();
        let got = z[1][0] - z[0][0];
        assert!((got - d).abs() < 1e-7, "t = {target}: {got} vs {d}");
    }
}

#[test]
fn symmetric_triple_stays_symmetric() {
    let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
    let k = InteractionKernel::build(&prof).unwrap();
    let start = SolitonConfiguration::collinear(vec![1, -1, 1], &[-10.0, 0.0, 10.0], 1).unwrap();
    let traj = integrate_centers_partial(&start, &k, 1e6, 1e-10).unwrap();
    for s in &traj.states {
        assert!((s.z[0][0] + s.z[2][0]).abs() <= 1e-12 * s.z[2][0].abs());
        assert_eq!(s.z[1][0], 0.0);
    }
}

#[test]
fn seeded_unstable_mode_grows_at_the_positive_rate() {
    let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
    let lat = LatticeSoliton::new(&prof, 0.05).unwrap();
    let nu_plus = ModulationBasis::lattice(&lat).nu_plus;
    // a lone lattice soliton is an exact discrete equilibrium, so the seed is the only source
    let opts = TrackedRunOptions {
        t_end: 6.0,
        snapshot_every: 0.1,
        stabilize: false,
        unstable_seed: Some((0, 1e-5)),
        ..Default::default()
    };
    let run = run_tracked(&lat, &[1], &[0.0], &opts, None).unwrap();
    // the ν⁻ component has decayed by e^{-3} at t = 1
    let rate = a_plus_growth_rate(&run.records, 0, 1.0, 6.0).unwrap();
    assert!((rate - nu_plus).abs() <= 1e-2 * nu_plus, "rate {rate} vs ν⁺ {nu_plus}");
}

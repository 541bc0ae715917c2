use dnkg_core::ground_state::solve_ground_state;
use dnkg_core::modulation::{decompose, ModulationBasis, ModulationOptions};
use dnkg_core::reduced::integrate_centers_partial;
use dnkg_core::{initial_multi_soliton, FieldGrid, InteractionKernel, LatticeSoliton, ModelParameters, SolitonConfiguration};
use proptest::prelude::*;

fn cubic_line() -> ModelParameters {
    ModelParameters::new(1, 3.0, 1.0).unwrap()
}

fn kernel() -> InteractionKernel {
    InteractionKernel::build(&solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // line solitons: q(r) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1) r / 2)
    #[test]
    fn line_ground_state_matches_closed_form(p in 2.2f64..5.0) {
        let prof = solve_ground_state(ModelParameters::new(1, p, 1.0).unwrap(), 30.0, 1e-8).unwrap();
        let m = 1.0 / (p - 1.0);
        for r in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let exact = ((p + 1.0) / 2.0).powf(m) / (0.5 * (p - 1.0) * r).cosh().powf(2.0 * m);
            prop_assert!((prof.q(r) - exact).abs() < 1e-6, "p = {p}, r = {r}");
        }
    }

    #[test]
    fn reduced_dynamics_is_translation_covariant(d0 in 8.0f64..14.0, shift in -20.0f64..20.0, sign in prop::bool::ANY) {
        let k = kernel();
        let sigma = vec![1, if sign { 1 } else { -1 }];
        let a = SolitonConfiguration::collinear(sigma.clone(), &[0.0, d0], 1).unwrap();
        let b = SolitonConfiguration::collinear(sigma, &[shift, shift + d0], 1).unwrap();
        let ta = integrate_centers_partial(&a, &k, 500.0, 1e-10).unwrap();
        let tb = integrate_centers_partial(&b, &k, 500.0, 1e-10).unwrap();
        prop_assert_eq!(std::mem::discriminant(&ta.termination), std::mem::discriminant(&tb.termination));
        // away from a collapse, where round-off is amplified without bound
        let t = 0.5 * ta.times.last().unwrap().min(*tb.times.last().unwrap());
        let za = ta.positions_at(t).unwrap();
        let zb = tb.positions_at(t).unwrap();
        for (x, y) in za.iter().zip(&zb) {
            prop_assert!((x[0] + shift - y[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn reduced_dynamics_conserves_the_centroid(
        signs in prop::collection::vec(prop::bool::ANY, 3),
        gaps in prop::collection::vec(8.0f64..12.0, 2),
    ) {
        let k = kernel();
        let sigma: Vec<i8> = signs.iter().map(|s| if *s { 1 } else { -1 }).collect();
        let pos = [0.0, gaps[0], gaps[0] + gaps[1]];
        let start = SolitonConfiguration::collinear(sigma, &pos, 1).unwrap();
        let traj = integrate_centers_partial(&start, &k, 1e4, 1e-10).unwrap();
        let c0: f64 = pos.iter().sum();
        for s in &traj.states {
            let c: f64 = s.z.iter().map(|z| z[0]).sum();
            prop_assert!((c - c0).abs() < 1e-8 * (1.0 + c0.abs()));
        }
    }

    #[test]
    fn exact_lattice_sums_decompose_to_their_centers(
        offset in -0.5f64..0.5,
        gap in 8.0f64..12.0,
        kick in prop::collection::vec(-0.3f64..0.3, 3),
    ) {
        let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
        let lat = LatticeSoliton::new(&prof, 0.05).unwrap();
        let grid = FieldGrid::new(40.0, 0.05).unwrap();
        let z = [offset - gap, offset, offset + gap];
        let sigma = [1, -1, 1];
        let state = initial_multi_soliton(cubic_line(), grid, &lat, &sigma, &z, None).unwrap();
        let guess: Vec<f64> = z.iter().zip(&kick).map(|(a, b)| a + b).collect();
        let basis = ModulationBasis::lattice(&lat);
        // the guess alone fails the smallness test; the Newton basin is what is probed
        let opts = ModulationOptions { proceed_on_violation: true, ..Default::default() };
        let rec = decompose(&state, &sigma, &guess, &basis, &opts).unwrap();
        for (a, b) in rec.z_tilde.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        prop_assert!(rec.eps_norm < 1e-8);
    }
}

#[test]
fn force_is_positive_and_decreasing_past_its_peak() {
    let k = kernel();
    let mut r = 2.0;
    while r < 30.0 {
        assert!(k.force(r) > 0.0);
        assert!(k.force(r + 0.1) < k.force(r), "r = {r}");
        r += 0.1;
    }
}

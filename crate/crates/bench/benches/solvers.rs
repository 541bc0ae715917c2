use criterion::{black_box, criterion_group, criterion_main, Criterion};

use dnkg_core::ground_state::solve_ground_state;
use dnkg_core::modulation::{decompose, ModulationBasis, ModulationOptions};
use dnkg_core::{
    initial_multi_soliton, integrate_centers, FieldGrid, InteractionKernel, LatticeSoliton, ModelParameters,
    SolitonConfiguration,
};

fn cubic_line() -> ModelParameters {
    ModelParameters::new(1, 3.0, 1.0).unwrap()
}

fn shooting(c: &mut Criterion) {
    c.bench_function("ground_state_d1", |b| {
        b.iter(|| solve_ground_state(black_box(cubic_line()), 30.0, 1e-8).unwrap())
    });
    let d3 = ModelParameters::new(3, 3.0, 1.0).unwrap();
    c.bench_function("ground_state_d3", |b| b.iter(|| solve_ground_state(black_box(d3), 30.0, 1e-8).unwrap()));
}

fn kernel(c: &mut Criterion) {
    let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
    c.bench_function("kernel_build", |b| b.iter(|| InteractionKernel::build(black_box(&prof)).unwrap()));
}

fn reduced(c: &mut Criterion) {
    let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
    let k = InteractionKernel::build(&prof).unwrap();
    let start = SolitonConfiguration::collinear(vec![1, -1, 1], &[-10.0, 0.0, 10.0], 1).unwrap();
    c.bench_function("centers_to_1e6", |b| {
        b.iter(|| integrate_centers(black_box(&start), &k, 1e6, 1e-10).unwrap())
    });
}

fn field(c: &mut Criterion) {
    let prof = solve_ground_state(cubic_line(), 30.0, 1e-8).unwrap();
    let lat = LatticeSoliton::new(&prof, 0.05).unwrap();
    let grid = FieldGrid::new(40.0, 0.05).unwrap();
    let state = initial_multi_soliton(cubic_line(), grid, &lat, &[1, -1, 1], &[-8.0, 0.0, 8.0], None).unwrap();
    let mut s = state.clone();
    c.bench_function("field_step_h0.05", |b| b.iter(|| s.step(0.02).unwrap()));
    let basis = ModulationBasis::lattice(&lat);
    let opts = ModulationOptions::default();
    c.bench_function("decompose_three", |b| {
        b.iter(|| decompose(black_box(&state), &[1, -1, 1], &[-8.0, 0.0, 8.0], &basis, &opts).unwrap())
    });
}

criterion_group!(benches, shooting, kernel, reduced, field);
criterion_main!(benches);

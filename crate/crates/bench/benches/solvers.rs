use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plate_spectra::{
    assemble_bilaplacian, dense_spectrum, parse_profile, rightmost_eigenvalues, shift_invert_spectrum, simulate,
    ArnoldiOptions, Complex64, CrankNicolson, GridSpec, SweepOptions, SweepPlan,
};
use plate_spectra_bench::{mode_state, plate, FULL, QUARTER};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_bilaplacian");
    for n in [15, 31, 63] {
        let g = GridSpec::new(1.0, 1.0, n, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| assemble_bilaplacian(g)));
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    group.sample_size(10);
    let small = plate(15, "1", QUARTER);
    group.bench_function("dense_15", |b| b.iter(|| dense_spectrum(&small, 1800).unwrap()));
    let op = plate(31, "1", QUARTER);
    let opts = ArnoldiOptions::default();
    group.bench_function("shift_invert_31_k12", |b| {
        b.iter(|| shift_invert_spectrum(&op, Complex64::new(-0.5, 100.0), 12, &opts).unwrap())
    });
    let lowest = SweepOptions {
        plan: SweepPlan::Lowest(20),
        ..SweepOptions::default()
    };
    group.bench_function("sweep_lowest20_31", |b| b.iter(|| rightmost_eigenvalues(&op, 12, &lowest).unwrap()));
    group.finish();
}

fn time_stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("crank_nicolson");
    for n in [15, 31] {
        let op = plate(n, "x*y", FULL);
        let s0 = mode_state(&op, 3, 3);
        let cn = CrankNicolson::new(&op, 1e-3).unwrap();
        group.bench_with_input(BenchmarkId::new("100_steps", n), &n, |b, _| b.iter(|| cn.advance(&s0, 100).unwrap()));
    }
    let op = plate(15, "1", FULL);
    let s0 = mode_state(&op, 1, 1);
    group.sample_size(10);
    group.bench_function("simulate_15_t1", |b| b.iter(|| simulate(&op, &s0, 1e-3, 1.0, 10).unwrap()));
    group.finish();
}

fn parsing(c: &mut Criterion) {
    c.bench_function("parse_profile", |b| {
        b.iter(|| parse_profile("1/(1 + exp(-10*(x - 0.5))) * sin(3*x)*cos(2*y) + 0.25").unwrap())
    });
}

criterion_group!(benches, assembly, eigen, time_stepping, parsing);
criterion_main!(benches);

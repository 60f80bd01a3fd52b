use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64 as C64;

use qcorr_bench::{bell_phi, common_generator, independent_generator, short_grid};
use qcorr_core::heom::integrate;
use qcorr_core::measures::{concurrence, discord};

fn bench_heom_rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("heom_rhs");
    for depth in [8, 16] {
        let gen = independent_generator(depth);
        let x = vec![C64::new(0.1, -0.05); gen.dim()];
        let mut out = vec![C64::new(0.0, 0.0); gen.dim()];
        group.bench_function(format!("independent_n{depth}"), |b| {
            b.iter(|| gen.apply(std::hint::black_box(&x), &mut out))
        });
    }
    let gen = common_generator(16);
    let x = vec![C64::new(0.1, -0.05); gen.dim()];
    let mut out = vec![C64::new(0.0, 0.0); gen.dim()];
    group.bench_function("common_n16", |b| {
        b.iter(|| gen.apply(std::hint::black_box(&x), &mut out))
    });
    group.finish();
}

fn bench_integrate(c: &mut Criterion) {
    let gen = independent_generator(8);
    let rho0 = bell_phi();
    let grid = short_grid();
    c.bench_function("integrate_independent_n8_t1", |b| {
        b.iter(|| integrate(&gen, &rho0, &grid, 0.01).unwrap())
    });
}

fn bench_measures(c: &mut Criterion) {
    let gen = common_generator(10);
    let rho0 = bell_phi();
    let grid = short_grid();
    let traj = integrate(&gen, &rho0, &grid, 0.01).unwrap();
    let mid = traj.states[traj.states.len() / 2].clone();
    c.bench_function("discord_single_state", |b| {
        b.iter_batched(|| mid.clone(), |rho| discord(&rho).unwrap(), BatchSize::SmallInput)
    });
    c.bench_function("concurrence_single_state", |b| {
        b.iter_batched(
            || mid.clone(),
            |rho| concurrence(&rho).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_heom_rhs, bench_integrate, bench_measures);
criterion_main!(benches);

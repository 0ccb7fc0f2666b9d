//! Compare the rayon and sequential builds on the two hot loops: the
//! crossing scan over a detuning grid and the Dyson memory sum.
//!
//! Run once per flavour:
//!
//! ```text
//! cargo bench -p magnoconv --bench parallel_vs_sequential
//! cargo bench -p magnoconv --bench parallel_vs_sequential --no-default-features
//! ```
//!
//! Criterion labels each group with the active flavour so both runs can be
//! compared side by side in `target/criterion`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use magnoconv::environments::{correlation_kernel, KernelOptions, SpectralDensity, TimeGrid};
use magnoconv::fock::FockConfig;
use magnoconv::hamiltonians::{SubspaceSpec, SystemParams};
use magnoconv::langevin::{solve_dyson, BathChannel};
use magnoconv::parallel::is_parallel;
use magnoconv::perturbation::{linear_grid, scan_crossing};

fn flavour() -> &'static str {
    if is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn crossing_scan(c: &mut Criterion) {
    let params = SystemParams::from_detunings(1.0, 1.7, 0.1, 0.1);
    let config = FockConfig::three_mode(4, 4, 4).unwrap();
    let mut group = c.benchmark_group(format!("crossing-scan/{}", flavour()));
    group.sample_size(10);
    for points in [101, 401] {
        let grid = linear_grid(0.9, 1.1, points);
        group.bench_with_input(BenchmarkId::from_parameter(points), &grid, |b, grid| {
            b.iter(|| scan_crossing(&params, grid, &SubspaceSpec::single(), &config).unwrap())
        });
    }
    group.finish();
}

fn dyson_memory(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("dyson/{}", flavour()));
    group.sample_size(10);
    for steps in [20_000usize, 80_000] {
        let grid = TimeGrid::new(5e-3, steps).unwrap();
        let photon = correlation_kernel(&SpectralDensity::ohmic(1e-4, 5.0, 1.0), grid, KernelOptions::default()).unwrap();
        let photon = BathChannel::Structured(photon);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &grid, |b, grid| {
            b.iter(|| solve_dyson(0.02, &photon, &BathChannel::Isolated, *grid).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, crossing_scan, dyson_memory);
criterion_main!(benches);

//! Parallel against single-threaded runs of the hot paths.
//!
//! `cargo bench -p equinox-core` compares rayon's default pool with a
//! one-thread pool. `cargo bench -p equinox-core --no-default-features`
//! measures the sequential build itself.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use equinox_core::equilibrium::{solve, Economy};
use equinox_core::geometry::{ConvexBody, FiniteCone};
use equinox_core::preferences::{demand, demand_grid_oracle, Preference};
use equinox_core::Vector;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn e1() -> Economy {
    let x = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
    let pref = Preference::new(x, v(&[-0.2, 1.5]), None).unwrap();
    let cone = FiniteCone::new(vec![v(&[-1.0, 1.0]), v(&[0.0, -1.0]), v(&[-1.0, 0.0])]).unwrap();
    Economy::new(vec![pref], cone, Some(vec![v(&[-0.5, 0.3])])).unwrap()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    vec![("default", default), ("one-thread", single)]
}

fn bench(c: &mut Criterion) {
    let econ = e1();
    let pref = Preference::new(
        ConvexBody::new_box(v(&[-1.0; 3]), v(&[1.0; 3])).unwrap(),
        v(&[0.9, 0.5, -0.2]),
        None,
    )
    .unwrap();
    let p3 = v(&[0.7, 1.9, 0.7]);
    let p2 = v(&[5.0, 5.0]);

    let mut group = c.benchmark_group("equinox");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("solve_e1", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| solve(black_box(&econ), 0.01, 0, 12).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("demand_3d", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| demand(black_box(&pref), &p3, 1e-7).unwrap()))
        });
        group.bench_with_input(
            BenchmarkId::new("grid_oracle_2d", name),
            &pool,
            |b, pool| {
                b.iter(|| {
                    pool.install(|| {
                        demand_grid_oracle(black_box(&econ.consumers()[0]), &p2, 2e-3).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

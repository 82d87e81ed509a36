use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geomech_bench::{dense_gnp, sparse_gnp};
use geomech_core::bounds::{
    solve_equalized_exact, solve_equalized_generic, solve_equalized_system,
};
use geomech_core::graph::{progeny, Closure};
use geomech_core::influence::{influential_set, influential_set_unpruned};
use geomech_core::mechanism::geometric;
use geomech_core::verify::{check_ic_all, SubsetBudget};
use geomech_core::MechanismKind;

fn reachability(c: &mut Criterion) {
    let mut group = c.benchmark_group("progeny");
    for n in [64, 256, 1024] {
        let g = sparse_gnp(n, 4.0);
        group.bench_with_input(BenchmarkId::new("bfs", n), &g, |b, g| {
            b.iter(|| progeny(black_box(g)))
        });
        group.bench_with_input(BenchmarkId::new("closure", n), &g, |b, g| {
            b.iter(|| Closure::new(black_box(g)).progeny())
        });
    }
    group.finish();
}

fn selection(c: &mut Criterion) {
    let mut group = c.benchmark_group("influential_set");
    for n in [64, 256] {
        let g = dense_gnp(n);
        group.bench_with_input(BenchmarkId::new("pruned", n), &g, |b, g| {
            b.iter(|| influential_set(black_box(g)))
        });
        group.bench_with_input(BenchmarkId::new("unpruned", n), &g, |b, g| {
            b.iter(|| influential_set_unpruned(black_box(g)))
        });
        group.bench_with_input(BenchmarkId::new("geometric", n), &g, |b, g| {
            b.iter(|| geometric(black_box(g)))
        });
    }
    group.finish();
}

fn incentive_check(c: &mut Criterion) {
    let g = sparse_gnp(12, 3.0);
    let budget = SubsetBudget::default();
    c.bench_function("check_ic_all/n12", |b| {
        b.iter(|| check_ic_all(&MechanismKind::Geometric, black_box(&g), budget))
    });
}

fn bound_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("equalized_system");
    for k in [100, 1000] {
        group.bench_with_input(BenchmarkId::new("closed_form", k), &k, |b, &k| {
            b.iter(|| solve_equalized_system(black_box(k)))
        });
        group.bench_with_input(BenchmarkId::new("generic", k), &k, |b, &k| {
            b.iter(|| solve_equalized_generic(black_box(k)))
        });
    }
    group.bench_function("exact/50", |b| {
        b.iter(|| solve_equalized_exact(black_box(50)))
    });
    group.finish();
}

criterion_group!(
    benches,
    reachability,
    selection,
    incentive_check,
    bound_solvers
);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use gridplan_core::{
    analyze_topology, evaluate_solution, exhaustive_search, fixtures, run_load_flow, Algorithm, LoadCase, Solution,
};
use std::hint::black_box;

fn load_flow(c: &mut Criterion) {
    let ring = fixtures::intro_ring();
    let case = LoadCase::high_feed_in();
    c.bench_function("load_flow/intro_ring", |b| {
        b.iter(|| run_load_flow(black_box(&ring), &case).unwrap())
    });
    let radial = fixtures::random_radial_network(1, 200);
    c.bench_function("load_flow/radial_200", |b| {
        b.iter(|| run_load_flow(black_box(&radial), &case).unwrap())
    });
    c.bench_function("topology/radial_200", |b| {
        b.iter(|| analyze_topology(black_box(&radial)).unwrap())
    });
}

fn evaluation(c: &mut Criterion) {
    let p = fixtures::intro_problem();
    let s: Solution = ["OPEN_SWITCH_4", "REPLACE_LINE_6"].into_iter().collect();
    c.bench_function("evaluate/intro_optimum", |b| {
        b.iter(|| evaluate_solution(&p, black_box(&s)).unwrap())
    });
}

fn search(c: &mut Criterion) {
    let p = fixtures::intro_problem();
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    g.bench_function("exhaustive/intro_16", |b| {
        b.iter(|| exhaustive_search(black_box(&p)).unwrap())
    });
    for algorithm in [Algorithm::Ils, Algorithm::IlsAe, Algorithm::Lahc] {
        let config = algorithm.default_config().with_seed(1).with_budget(1000);
        g.bench_function(format!("{}/intro_16_budget_1000", algorithm.name()), |b| {
            b.iter(|| algorithm.run(black_box(&p), &config).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, load_flow, evaluation, search);
criterion_main!(benches);

// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rtlfix_bench::{reset_seed, BENCH_DESIGNS};
use rtlfix_core::concolic::{explore, random_vector, ExploreBudget};
use rtlfix_core::corpus::{load, source};
use rtlfix_core::instrument::InstrumentedDesign;
use rtlfix_core::oracle::{differential_check, CounterModel, InProcess};
use rtlfix_core::sim::run;
use rtlfix_core::solver::{gen, solve, SolveBudget};
use rtlfix_core::verilog::parse_module;

fn front_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("parse+instrument");
    for name in BENCH_DESIGNS {
        let src = source(name).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(name), src, |b, s| {
            b.iter(|| InstrumentedDesign::from_module(parse_module(black_box(s)).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let d = load("traffic_light");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_vector(&d.design.input_ports(), 64, &mut rng);
    c.bench_function("simulate traffic_light 64 cycles", |b| b.iter(|| run(&d, black_box(&v)).unwrap()));
}

fn concolic(c: &mut Criterion) {
    let mut g = c.benchmark_group("concolic");
    g.sample_size(10);
    for name in BENCH_DESIGNS {
        let d = load(name);
        let seeds = reset_seed(&d, 3);
        g.bench_function(*name, |b| b.iter(|| explore(&d, &seeds, ExploreBudget::default()).unwrap()));
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sets: Vec<_> = (0..50).map(|_| gen::random_small_set(&mut rng)).collect();
    c.bench_function("solve 50 random sets", |b| {
        b.iter(|| sets.iter().map(|s| solve(s, SolveBudget::default()).unwrap().is_sat()).filter(|x| *x).count())
    });
}

fn diff(c: &mut Criterion) {
    let d = load("listing2");
    let full = explore(&d, &reset_seed(&d, 3), ExploreBudget::default()).unwrap().inputs;
    let oracle = InProcess(CounterModel::default);
    c.bench_function("diff listing2 in-process", |b| b.iter(|| differential_check(&d, &oracle, &full, 1).unwrap()));
}

criterion_group!(benches, front_end, simulate, concolic, solver, diff);
criterion_main!(benches);

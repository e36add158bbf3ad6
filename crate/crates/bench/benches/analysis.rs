use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use projlab_bench::fixture;
use projlab_core::diagnostics::{bridge_norms, ConditionalNorms};
use projlab_core::lemmas::{check_lnegli, gen_subadditive, SubadditiveStyle};
use projlab_core::simulate::simulate;
use projlab_core::variance::VarianceProfile;
use projlab_core::OperatorTable;
use std::hint::black_box;

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("operator_table");
    for size in [8, 64] {
        let chain = fixture(size);
        g.bench_with_input(BenchmarkId::from_parameter(size), &chain, |b, ch| {
            b.iter(|| OperatorTable::build(ch, black_box(1024)).unwrap())
        });
    }
    g.finish();
}

fn bridge(c: &mut Criterion) {
    let chain = fixture(16);
    c.bench_function("bridge_norms_16x256", |b| {
        b.iter(|| bridge_norms(&chain, black_box(256)).unwrap())
    });
}

fn full_profile(c: &mut Criterion) {
    let chain = fixture(8);
    c.bench_function("conditions_and_variance_8x512", |b| {
        b.iter(|| {
            let table = OperatorTable::build(&chain, 512).unwrap();
            let norms = ConditionalNorms::compute(&chain, &table, 512).unwrap();
            VarianceProfile::compute(&chain, &table, &norms.bridge, 512).unwrap()
        })
    });
}

fn monte_carlo(c: &mut Criterion) {
    let chain = fixture(8);
    c.bench_function("simulate_8x256x1000", |b| {
        b.iter(|| simulate(&chain, 256, 1000, black_box(1)).unwrap())
    });
}

fn lemmas(c: &mut Criterion) {
    c.bench_function("lnegli_random_min_4096", |b| {
        b.iter(|| check_lnegli(&gen_subadditive(black_box(3), 4096, SubadditiveStyle::RandomMin).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = operators, bridge, full_profile, monte_carlo, lemmas
}
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fase_bench::Fixture;
use fase_core::{fase_extrapolate, se_extrapolate, TransformKind};

fn iterations(c: &mut Criterion) {
    let fixture = Fixture::new(TransformKind::Dct, 16, 1).unwrap();
    let tables = fixture.tables().unwrap();
    let mut group = c.benchmark_group("iterations_16x16_dct");
    group.sample_size(10);
    for iters in [10, 50, 250] {
        let cfg = fixture.config(iters);
        group.bench_with_input(BenchmarkId::new("se", iters), &cfg, |b, cfg| {
            b.iter(|| se_extrapolate(&fixture.signal, &fixture.mask, &fixture.dict, cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fase", iters), &cfg, |b, cfg| {
            b.iter(|| {
                fase_extrapolate(&fixture.signal, &fixture.mask, &fixture.dict, &tables, cfg)
                    .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, iterations);
criterion_main!(benches);

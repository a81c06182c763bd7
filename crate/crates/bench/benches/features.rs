use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use lsmc_bench::gaussian;
use lsmc_core::features::RffMap;
use lsmc_core::simplex::{project_rows, project_simplex};
use std::hint::black_box;

fn simplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("simplex");
    for k in [3, 10, 100] {
        let v: Vec<f64> = gaussian(1, k, k as u64).into_raw_vec_and_offset().0;
        group.bench_with_input(BenchmarkId::new("vector", k), &v, |b, v| {
            b.iter(|| project_simplex(black_box(v)).unwrap())
        });
    }
    let rows = gaussian(10_000, 10, 1);
    group.throughput(Throughput::Elements(10_000));
    group.bench_function("rows/10000x10", |b| {
        b.iter(|| {
            let mut m = rows.clone();
            project_rows(&mut m).unwrap();
            m
        })
    });
    group.finish();
}

fn rff(c: &mut Criterion) {
    let x = gaussian(2000, 50, 2);
    let mut group = c.benchmark_group("rff-transform");
    group.throughput(Throughput::Elements(2000));
    for m in [256, 1024] {
        let map = RffMap::new(50, m, 10.0, 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &map, |b, map| {
            b.iter(|| map.transform(black_box(x.view())).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simplex, rff);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use shockzone::mmpde::{elliptic_from, parabolic_from, EllipticSolveConfig, ParabolicSolveConfig};
use shockzone::monitor::{monitor_eval, FieldSampler, MonitorConfig};
use shockzone::surrogate::predict_spacing;
use shockzone_bench::{model, sod_momentum, uniform};

fn zoning(c: &mut Criterion) {
    let grid = uniform();
    let fields = sod_momentum(&grid, 0.1);
    let elliptic = MonitorConfig::elliptic_default();
    let parabolic = MonitorConfig::parabolic_default();
    let net = model(1);
    let mut g = c.benchmark_group("zone_sod_t0.1");
    g.bench_function("elliptic", |b| {
        b.iter(|| {
            let sampler = FieldSampler::new(&fields, &grid, &elliptic).unwrap();
            elliptic_from(&sampler, &grid, &EllipticSolveConfig::default()).unwrap()
        })
    });
    g.bench_function("parabolic", |b| {
        b.iter(|| {
            let sampler = FieldSampler::new(&fields, &grid, &parabolic).unwrap();
            parabolic_from(&sampler, &grid, &ParabolicSolveConfig::default()).unwrap()
        })
    });
    g.bench_function("surrogate", |b| {
        b.iter(|| {
            let omega = monitor_eval(&fields, &grid, &elliptic).unwrap();
            predict_spacing(&net, &omega).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, zoning);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fogswipt_bench::instance;
use fogswipt_core::fot::lambert_w0;
use fogswipt_core::{dual_ascent_solve, solve_fot, solve_oot, DualAscentSettings, IpmSettings, OffloadMode, OotSettings};
use std::hint::black_box;

fn fot(c: &mut Criterion) {
    let mut g = c.benchmark_group("fot");
    for n in 1..=4 {
        let (p, ch) = instance(n, 0);
        let t_u = 0.8 * p.block_time_s;
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_fot(&p, &ch, t_u, OffloadMode::Partial, &IpmSettings::default()).unwrap())
        });
    }
    g.finish();
}

fn oot(c: &mut Criterion) {
    let mut g = c.benchmark_group("oot");
    g.sample_size(10);
    for n in 1..=4 {
        let (p, ch) = instance(n, 0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_oot(&p, &ch, &OotSettings::default()).unwrap())
        });
    }
    g.finish();
}

fn dual_ascent(c: &mut Criterion) {
    let (p, ch) = instance(2, 0);
    let t_u = 0.8 * p.block_time_s;
    c.bench_function("dual_ascent", |b| b.iter(|| dual_ascent_solve(&p, &ch, t_u, &DualAscentSettings::default()).unwrap()));
}

fn lambert(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1000).map(|k| -0.36 + 1e-3 * (k as f64).powi(3)).collect();
    c.bench_function("lambert_w0_x1000", |b| b.iter(|| xs.iter().map(|&x| lambert_w0(black_box(x)).unwrap()).sum::<f64>()));
}

criterion_group!(benches, fot, oot, dual_ascent, lambert);
criterion_main!(benches);

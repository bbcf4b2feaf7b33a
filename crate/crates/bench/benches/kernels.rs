use std::f64::consts::FRAC_1_SQRT_2;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fractail_bench::{geometric, three_mode_tail, unit_source};
use fractail_core::asymptotics::{exponent_ladder, moments};
use fractail_core::forward::psi_tail;
use fractail_core::inverse::{extract_spectral_sums, ExtractionMode};
use fractail_core::mittag_leffler::{ml_eval, MlParams};

fn ml(c: &mut Criterion) {
    let xs: Vec<f64> = geometric(1e-4, 1e4, 25).into_iter().map(|x| -x).collect();
    let mut group = c.benchmark_group("ml_eval");
    for (name, a, b) in [("half", 0.5, 1.0), ("irrational", FRAC_1_SQRT_2, FRAC_1_SQRT_2), ("wave", 1.5, 2.5)] {
        let p = MlParams::new(a, b).unwrap();
        group.bench_function(name, |bench| bench.iter(|| xs.iter().map(|&x| ml_eval(p, black_box(x))).sum::<f64>()));
    }
    group.finish();
}

fn tails(c: &mut Criterion) {
    let times = geometric(2.0, 1e4, 16);
    let src = unit_source();
    c.bench_function("psi_tail/64_points", |b| {
        b.iter(|| psi_tail(black_box(39.47841760435743), 0.5, &src, &times).unwrap())
    });
}

fn extraction(c: &mut Criterion) {
    let data = three_mode_tail(FRAC_1_SQRT_2);
    let ladder = exponent_ladder(FRAC_1_SQRT_2, 6).unwrap();
    let mv = moments(&unit_source(), 6);
    let mut group = c.benchmark_group("extract_spectral_sums");
    for mode in [ExtractionMode::LeastSquares, ExtractionMode::Sequential] {
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| extract_spectral_sums(black_box(&data), &ladder, &mv, 6, 6, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ml, tails, extraction);
criterion_main!(benches);

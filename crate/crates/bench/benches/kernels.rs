use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mhdpp_bench::state_pair;
use mhdpp_core::flux::{hll_flux, pp_wave_speeds};
use mhdpp_core::limiter::{pp_limit_cell, PointTable, PpLimiterParams};
use mhdpp_core::ppcheck::run_verification_suite;
use mhdpp_core::{Direction, Eos};

fn flux(c: &mut Criterion) {
    let eos = Eos::ideal(1.4).unwrap();
    let (a, b) = state_pair(&eos);
    let dir = Direction::from_angle(0.3);
    c.bench_function("pp_wave_speeds", |bch| bch.iter(|| pp_wave_speeds(black_box(&a), black_box(&b), &dir, &eos).unwrap()));
    let ws = pp_wave_speeds(&a, &b, &dir, &eos).unwrap();
    c.bench_function("hll_flux", |bch| bch.iter(|| hll_flux(black_box(&a), black_box(&b), &dir, &ws, &eos).unwrap()));
}

fn limiter(c: &mut Criterion) {
    // P2 in 1D at three Lobatto points.
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    let rows = [-0.5, 0.0, 0.5].iter().map(|&x: &f64| vec![1.0, s3 * 2.0 * x, s5 * (6.0 * x * x - 0.5)]).collect();
    let table = PointTable::new(rows);
    let params = PpLimiterParams::default();
    let mut cell = vec![0.0; 24];
    cell[0] = 1.0;
    cell[7] = 2.0;
    cell[8] = 1.5;
    cell[15] = 3.0;
    c.bench_function("pp_limit_cell_p2", |bch| {
        bch.iter(|| {
            let mut u = cell.clone();
            pp_limit_cell(black_box(&mut u), &table, &params, 0).unwrap()
        })
    });
}

fn suite(c: &mut Criterion) {
    let eos = Eos::ideal(1.4).unwrap();
    let mut g = c.benchmark_group("verification");
    g.sample_size(10);
    g.bench_function("suite_100_trials", |bch| bch.iter(|| run_verification_suite(black_box(1), 100, &eos)));
    g.finish();
}

criterion_group!(benches, flux, limiter, suite);
criterion_main!(benches);

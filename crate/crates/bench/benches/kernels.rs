use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riszf_core::channel::draw_channels;
use riszf_core::detection::zf_snrs;
use riszf_core::montecarlo::simulate;
use riszf_core::phasedesign::{algorithm2, instant_sweep, DEFAULT_EPS, DEFAULT_MAX_SWEEPS};
use riszf_core::rng::stream_rng;
use riszf_core::stats::{average_se, outage_cdf, sigma_inv_diag};
use riszf_core::{CsiMode, EquivalentStats, PhaseMode, PhaseSet, SystemConfig};

fn phase_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("instant_sweep");
    for l in [64usize, 256, 1024] {
        let cfg = SystemConfig::default().with_dims(4, 8, l);
        let base = draw_channels(&cfg, &mut stream_rng(1, 0));
        let set = PhaseSet::new(cfg.q);
        group.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, _| {
            b.iter_batched(
                || base.clone(),
                |mut real| instant_sweep(&mut real, set).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn statistical_design(c: &mut Criterion) {
    let cfg = SystemConfig::default().with_dims(4, 8, 256);
    let stats = EquivalentStats::at_zero_phases(&cfg).unwrap();
    c.bench_function("algorithm2/L=256", |b| {
        b.iter(|| algorithm2(black_box(&cfg), &stats, DEFAULT_EPS, DEFAULT_MAX_SWEEPS).unwrap())
    });
}

fn detection(c: &mut Criterion) {
    let cfg = SystemConfig::default().with_dims(4, 8, 256);
    let real = draw_channels(&cfg, &mut stream_rng(2, 0));
    c.bench_function("zf_snrs/4x8", |b| b.iter(|| zf_snrs(black_box(&real.h_tot), cfg.p, 1.0).unwrap()));
}

fn closed_forms(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    let stats = EquivalentStats::at_zero_phases(&cfg).unwrap();
    let sid = sigma_inv_diag(&cfg, &stats);
    c.bench_function("outage_cdf", |b| {
        b.iter(|| outage_cdf(black_box(1.0), &cfg, sid, cfg.n, cfg.m, 1.0).unwrap())
    });
    c.bench_function("average_se", |b| b.iter(|| average_se(black_box(&cfg), sid, 1.0).unwrap()));
    c.bench_function("equivalent_stats/L=256", |b| {
        b.iter(|| EquivalentStats::at_zero_phases(black_box(&cfg)).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let cfg = SystemConfig::default().with_dims(4, 8, 64);
    let mut group = c.benchmark_group("simulate_1000");
    group.sample_size(10);
    for mode in [PhaseMode::Random, PhaseMode::Mismatch] {
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| simulate(&cfg, mode, CsiMode::Imperfect, 1000, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, phase_sweep, statistical_design, detection, closed_forms, monte_carlo);
criterion_main!(benches);

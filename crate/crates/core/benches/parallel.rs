//! Sequential vs data-parallel timing of the batch-shaped inner loops:
//! period-table energy grids, spectral index sweeps, and batched shots.
//!
//! Built with the default `parallel` feature both arms are real; without
//! it the parallel arm degrades to the sequential path and the pairs
//! should time identically.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sitnikov::conservative::Conservative;
use sitnikov::par::ExecMode;
use sitnikov::primaries::{build_kepler_pair, EnsembleConfig, PrimaryEnsemble};
use sitnikov::shooting::{shoot_batch, ShotConfig};
use sitnikov::spectral::{sturm_eigenvalues, SturmConfig};

fn kepler() -> PrimaryEnsemble {
    build_kepler_pair(0.4, &EnsembleConfig::default()).unwrap()
}

fn modes() -> [(&'static str, ExecMode); 2] {
    [
        ("sequential", ExecMode::Sequential),
        ("parallel", ExecMode::Parallel),
    ]
}

fn bench_period_table(c: &mut Criterion) {
    let ens = kepler();
    let cons = Conservative::new(&ens);
    let e_min = cons.e_min();
    let energies: Vec<f64> = (0..64)
        .map(|k| e_min * (0.98 - 0.015 * k as f64))
        .collect();
    let mut group = c.benchmark_group("period_table_64");
    group.sample_size(20);
    for (label, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| {
                let rows = cons.period_table(&energies, mode);
                assert!(rows.iter().all(|r| r.is_ok()));
                rows.len()
            })
        });
    }
    group.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let ens = kepler();
    let cfg = SturmConfig::default();
    let mut group = c.benchmark_group("spectrum_p_max_10");
    group.sample_size(10);
    for (label, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| {
                let report = sturm_eigenvalues(&ens, 1.0, 10, 1, &cfg, mode).unwrap();
                report.indices.len()
            })
        });
    }
    group.finish();
}

fn bench_shot_batch(c: &mut Criterion) {
    let ens = kepler();
    let cfg = ShotConfig::default();
    let points: Vec<(f64, f64)> = (0..32)
        .map(|k| (0.3 + 0.02 * k as f64, k as f64 / 31.0))
        .collect();
    let mut group = c.benchmark_group("shot_batch_32");
    group.sample_size(10);
    for (label, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| {
                let shots = shoot_batch(&ens, &points, 1, 1, &cfg, mode);
                assert!(shots.iter().all(|s| s.is_ok()));
                shots.len()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_period_table, bench_spectrum, bench_shot_batch);
criterion_main!(benches);

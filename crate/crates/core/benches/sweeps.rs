//! Sequential vs rayon map over stability pipeline trials.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bmlab_core::par;
use bmlab_core::stability::{stability_pipeline, sweep_options, trial_body};

const SEED: u64 = 11;

fn trial(i: usize) -> f64 {
    stability_pipeline(&trial_body(SEED, i), &sweep_options(SEED))
        .map(|r| r.slack)
        .unwrap_or(f64::NAN)
}

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("stability_pipeline");
    g.sample_size(10);
    for n in [16usize, 64] {
        g.bench_with_input(BenchmarkId::new("seq", n), &n, |b, &n| {
            b.iter(|| par::map_seq(n, trial))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("par", n), &n, |b, &n| {
            b.iter(|| par::map_par(n, trial))
        });
    }
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);

//! Sequential vs data-parallel timings for the two hot sweeps: greedy
//! candidate evaluation (one derandomization step) and a seeded Monte Carlo
//! sampling batch.
//!
//! Run with `cargo bench -p dopt`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dopt::derand::cond_exp_proportional;
use dopt::exec::{map_indexed_par, map_indexed_seq};
use dopt::gen::{generate_instance, random_fraction, Family};
use dopt::model::Mode;
use dopt::sampling::{sample_proportional, RngSeed};
use dopt::{FractionalDesign, Instance};

fn fixture(n: usize, m: usize, k: usize) -> (Instance, FractionalDesign) {
    let inst = generate_instance(m, n, k, Mode::WithoutRepetitions, Family::Gaussian, RngSeed(7))
        .expect("generator produces a valid instance");
    let frac = random_fraction(&inst, RngSeed(8)).expect("feasible fraction");
    (inst, frac)
}

/// One greedy step: evaluate H({j}) for every candidate j.
fn bench_candidate_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("derand_candidate_sweep");
    for &n in &[24usize, 48] {
        let (inst, frac) = fixture(n, 6, 12);
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, _| {
            b.iter(|| {
                map_indexed_seq(inst.n(), |j| {
                    cond_exp_proportional(&inst, &frac, &[j]).unwrap()
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("par", n), &n, |b, _| {
            b.iter(|| {
                map_indexed_par(inst.n(), |j| {
                    cond_exp_proportional(&inst, &frac, &[j]).unwrap()
                })
            })
        });
    }
    group.finish();
}

/// A batch of seeded sampler trials (the Monte Carlo inner loop).
fn bench_sampling_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampling_batch_1k");
    let (inst, frac) = fixture(24, 4, 8);
    let trials = 1_000usize;
    group.bench_function("seq", |b| {
        b.iter(|| {
            map_indexed_seq(trials, |t| {
                sample_proportional(&inst, &frac, RngSeed(11).for_trial(t as u64))
                    .unwrap()
                    .value()
            })
        })
    });
    group.bench_function("par", |b| {
        b.iter(|| {
            map_indexed_par(trials, |t| {
                sample_proportional(&inst, &frac, RngSeed(11).for_trial(t as u64))
                    .unwrap()
                    .value()
            })
        })
    });
    group.finish();
}

criterion_group!(benches, bench_candidate_sweep, bench_sampling_batch);
criterion_main!(benches);

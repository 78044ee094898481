//! Compares the rayon-backed `exec::map_indexed` against the sequential
//! fallback on the crate's three real parallel lanes: seesaw restarts,
//! batch Born evaluation, and WWZB family scans.
//!
//! With `--no-default-features` both sides run sequentially and should tie.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bellkit_core::correlations::{born_distribution, correlators, CorrelationTensor};
use bellkit_core::exec::{map_indexed, map_indexed_seq};
use bellkit_core::fixtures;
use bellkit_core::optimize::{seesaw, SearchBudget};
use bellkit_core::qcore::{QuantumState, Tolerance};
use bellkit_core::wwzb::{chsh, enumerate_wwzb};

fn single_restart_budget(seed: u64) -> SearchBudget {
    SearchBudget { seesaw_restarts: 1, ..SearchBudget::new(seed) }
}

fn bench_seesaw_restarts(c: &mut Criterion) {
    // the certify hot path: a 3⊗3 state, as in the bound-entanglement runs
    let state = fixtures::ppt_entangled_3x3(0.5);
    let ineq = chsh();
    let restarts = 16usize;
    let run = |i: usize| {
        seesaw(&state, &ineq, &single_restart_budget(1000 + i as u64))
            .expect("seesaw runs")
            .best_score
    };
    let mut group = c.benchmark_group("seesaw_restarts");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_indexed(restarts, run)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_indexed_seq(restarts, run)))
    });
    group.finish();
}

fn bench_born_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let states: Vec<QuantumState> = (0..64)
        .map(|_| {
            QuantumState::new(vec![2, 2], bellkit_core::qcore::random::random_density(&mut rng, 4))
                .expect("random density is valid")
        })
        .collect();
    let assembly = fixtures::chsh_assembly();
    let ineq = chsh();
    let run = |i: usize| {
        let dist = born_distribution(&states[i], &assembly).expect("born");
        ineq.score(&correlators(&dist)).expect("score")
    };
    let mut group = c.benchmark_group("born_batch");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_indexed(states.len(), run)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_indexed_seq(states.len(), run)))
    });
    group.finish();
}

fn bench_family_scan(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tensors: Vec<CorrelationTensor> = (0..32)
        .map(|_| {
            let values: Vec<f64> =
                (0..8).map(|_| rand::Rng::random::<f64>(&mut rng) * 2.0 - 1.0).collect();
            CorrelationTensor::with_tolerance(3, values, Tolerance::default()).expect("valid")
        })
        .collect();
    let run = |i: usize| {
        enumerate_wwzb(3)
            .expect("guarded N")
            .map(|ineq| ineq.score(&tensors[i]).expect("score"))
            .fold(0.0f64, f64::max)
    };
    let mut group = c.benchmark_group("wwzb_scan");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_indexed(tensors.len(), run)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_indexed_seq(tensors.len(), run)))
    });
    group.finish();
}

criterion_group!(benches, bench_seesaw_restarts, bench_born_batch, bench_family_scan);
criterion_main!(benches);

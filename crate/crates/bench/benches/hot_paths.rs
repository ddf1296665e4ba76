use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stash_bench::{random_word, ride};
use stash_core::alignment::pairwise_matrix;
use stash_core::ingest::{estimate_gravity, resample, GravityConfig};
use stash_core::movement::{extract_features, viterbi, HmmParams, Movement, DEFAULT_FEATURES};
use stash_core::turns::{turns_from_stream, TurnDetectorConfig};
use stash_core::{nw_score, ScoringScheme};

fn alignment(c: &mut Criterion) {
    let scheme = ScoringScheme::default();
    let mut g = c.benchmark_group("nw_score");
    // 2, 5 and 10 minute paths are roughly 30, 75 and 150 primitives.
    for len in [30, 75, 150] {
        let a = random_word(len, 1);
        let b = random_word(len, 2);
        g.bench_with_input(BenchmarkId::from_parameter(len), &len, |bch, _| {
            bch.iter(|| nw_score(black_box(&a), black_box(&b), &scheme))
        });
    }
    g.finish();

    let seqs: Vec<_> = (0..8).map(|i| random_word(40, 10 + i)).collect();
    c.bench_function("pairwise_matrix/8x40", |bch| bch.iter(|| pairwise_matrix(black_box(&seqs), &scheme)));
}

fn smoothing(c: &mut Criterion) {
    let params = HmmParams::default();
    // One hour of per-second labels with a stop every few minutes.
    let obs: Vec<Movement> = (0..3600)
        .map(|i| if i % 240 < 40 || i % 97 == 0 { Movement::Stationary } else { Movement::Moving })
        .collect();
    c.bench_function("viterbi/3600", |bch| bch.iter(|| viterbi(black_box(&obs), &params)));
}

fn sensing(c: &mut Criterion) {
    let stream = resample(&ride(5.0, 3), 20.0).unwrap();
    let gravity = estimate_gravity(&stream, &GravityConfig::default()).unwrap();
    let turns_cfg = TurnDetectorConfig::default();
    c.bench_function("resample/5min", |bch| {
        let raw = ride(5.0, 3);
        bch.iter(|| resample(black_box(&raw), 20.0).unwrap())
    });
    c.bench_function("extract_features/5min", |bch| {
        bch.iter(|| extract_features(black_box(&stream), &gravity, &DEFAULT_FEATURES).unwrap())
    });
    c.bench_function("turns_from_stream/5min", |bch| {
        bch.iter(|| turns_from_stream(black_box(&stream), &gravity, &turns_cfg).unwrap())
    });
}

criterion_group!(benches, alignment, smoothing, sensing);
criterion_main!(benches);

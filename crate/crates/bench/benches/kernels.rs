use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prefaudit_bench::{records, texts, vectors};
use prefaudit_core::reward::FeatureSpec;
use prefaudit_core::{ece, hash_featurize, loss_and_gradient, train, RewardModel, TrainConfig};
use std::hint::black_box;

fn loss_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("loss_and_gradient");
    for dim in [16, 384] {
        let s = vectors(4096, dim);
        let pairs = s.embeddings.response_pairs(&s.dataset).unwrap();
        let mut m = RewardModel::zeros(dim, FeatureSpec::of_table(&s.embeddings));
        m.weights = s.true_weights.clone();
        g.bench_with_input(BenchmarkId::from_parameter(dim), &pairs, |b, pairs| {
            b.iter(|| loss_and_gradient(black_box(&m), black_box(pairs), 1e-4).unwrap())
        });
    }
    g.finish();
}

fn featurize(c: &mut Criterion) {
    let d = texts(1000);
    c.bench_function("hash_featurize/1000x512", |b| {
        b.iter(|| hash_featurize(black_box(&d), 512, 0).unwrap())
    });
}

fn calibration(c: &mut Criterion) {
    let recs = records(20_000);
    c.bench_function("ece/20000x10", |b| {
        b.iter(|| ece(black_box(&recs), 10).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let s = vectors(2000, 16);
    let cfg = TrainConfig {
        learning_rate: 0.5,
        epochs: 20,
        ..Default::default()
    };
    c.bench_function("train/2000x16x20", |b| {
        b.iter(|| train(black_box(&s.dataset), &s.embeddings, &cfg, None).unwrap())
    });
}

criterion_group!(benches, loss_gradient, featurize, calibration, training);
criterion_main!(benches);

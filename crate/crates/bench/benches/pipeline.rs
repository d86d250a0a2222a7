use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dribble_core::config::Config;
use dribble_core::explain::{exact_shapley, linear_shap};
use dribble_core::features::extract_match;
use dribble_core::model::{saga_fit, SagaOptions};
use dribble_core::preprocess::fill_series;
use dribble_core::segment::build_dataset;
use dribble_core::skeleton::SegmentTable;
use dribble_core::synth::{plan_labeled_dataset, CorpusOptions, PlantedBeta};

fn gap_filling(c: &mut Criterion) {
    let n = 2500;
    let series: Vec<f64> = (0..n).map(|k| (k as f64 * 0.04).sin()).collect();
    let valid: Vec<bool> = (0..n).map(|k| k % 50 >= 4).collect();
    c.bench_function("fill_series_2500_frames", |b| b.iter(|| fill_series(black_box(&series), &valid, 25).unwrap()));
}

fn match_pipeline(c: &mut Criterion) {
    let cfg = Config::default();
    let table = SegmentTable::winter();
    let plan = &plan_labeled_dataset(50, &PlantedBeta::default(), 1, &CorpusOptions::default())[0];
    let (bundle, _) = plan.render().unwrap();
    let mut g = c.benchmark_group("match_50_take_ons");
    g.sample_size(20);
    g.bench_function("render", |b| b.iter(|| plan.render().unwrap()));
    g.bench_function("segment", |b| b.iter(|| build_dataset(black_box(&bundle), &cfg)));
    g.bench_function("segment_and_extract", |b| b.iter(|| extract_match(black_box(&bundle), &cfg, &table)));
    g.finish();
}

fn solver(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut g = c.benchmark_group("saga_fit");
    for n in [500, 5000] {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..14).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] - r[3] + rng.random_range(-1.0..1.0) > 0.0).collect();
        let w = vec![1.0; n];
        let opts = SagaOptions { lambda: 1.0 / n as f64, max_epochs: 1000, tol: 1e-6, seed: 0 };
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| saga_fit(&x, &y, &w, &opts).unwrap()));
    }
    g.finish();
}

fn attributions(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let background: Vec<Vec<f64>> = (0..200).map(|_| (0..14).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let x: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
    let model = {
        let y: Vec<bool> = background.iter().map(|r| r[0] > 0.0).collect();
        saga_fit(&background, &y, &vec![1.0; 200], &SagaOptions { lambda: 0.01, max_epochs: 500, tol: 1e-6, seed: 0 })
            .unwrap()
    };
    let mut g = c.benchmark_group("shap_14_features");
    g.bench_function("linear", |b| b.iter(|| linear_shap(&model, &background, black_box(&x)).unwrap()));
    g.sample_size(10);
    g.bench_function("exact", |b| b.iter(|| exact_shapley(|z| model.margin(z), &background, black_box(&x)).unwrap()));
    g.finish();
}

criterion_group!(benches, gap_filling, match_pipeline, solver, attributions);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lecseg_bench::{clip_points, synthetic_lecture};
use lecseg_core::baselines::{cte_segment, CteConfig};
use lecseg_core::embedder::batch_loss;
use lecseg_core::metrics::{evaluate, matched_overlap_metrics, FrameLabeling};
use lecseg_core::twfinch::segment_exact_k;
use lecseg_core::{JointEmbeddingParams, ModalityMask, ModelDims, TwfinchConfig};

fn twfinch(c: &mut Criterion) {
    let mut group = c.benchmark_group("twfinch_segment_exact_k");
    for n in [100, 300, 1000] {
        let lec = synthetic_lecture(n, 64, 1);
        let points = clip_points(&lec);
        let k = lec.gt.as_ref().unwrap().k();
        let cfg = TwfinchConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, p| {
            b.iter(|| segment_exact_k(black_box(p), lec.total_duration_s, k, &cfg).unwrap())
        });
    }
    group.finish();
}

fn cte(c: &mut Criterion) {
    let lec = synthetic_lecture(300, 64, 2);
    let points: Vec<Vec<f64>> = clip_points(&lec).into_iter().map(|p| p.phi).collect();
    let taus = lec.midpoints();
    let cfg = CteConfig::default();
    c.bench_function("cte_segment_300", |b| {
        b.iter(|| cte_segment(black_box(&points), &taus, lec.total_duration_s, &cfg).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let lec = synthetic_lecture(300, 16, 3);
    let gt = lec.gt.clone().unwrap();
    let points = clip_points(&lec);
    let pred = segment_exact_k(
        &points,
        lec.total_duration_s,
        gt.k(),
        &TwfinchConfig::default(),
    )
    .unwrap()
    .segmentation;
    c.bench_function("evaluate_300", |b| {
        b.iter(|| evaluate(black_box(&pred), &gt, &lec, &[5, 10, 30]).unwrap())
    });

    let starts = lec.starts();
    let p = FrameLabeling::from_segmentation(&pred, &starts, lec.total_duration_s).unwrap();
    let g = FrameLabeling::from_segmentation(&gt, &starts, lec.total_duration_s).unwrap();
    c.bench_function("matched_overlap_300", |b| {
        b.iter(|| matched_overlap_metrics(black_box(&p), &g).unwrap())
    });
}

fn loss(c: &mut Criterion) {
    let lec = synthetic_lecture(128, 64, 4);
    let params = JointEmbeddingParams::init(ModelDims::new(lec.dims().unwrap(), 64), 0).unwrap();
    let batch: Vec<_> = lec.clips.iter().collect();
    c.bench_function("batch_loss_128", |b| {
        b.iter(|| batch_loss(black_box(&params), &batch, 0.2, ModalityMask::ALL).unwrap())
    });
}

criterion_group!(benches, twfinch, cte, metrics, loss);
criterion_main!(benches);

use avmark_core::calibration::{fit_temperature_with, CalibrationConfig};
use avmark_core::pipeline::{distort_benchmark, run_stages, PipelineConfig, Variant};
use avmark_core::simulate::{generate_benchmark_with, Distortion, GenConfig};
use avmark_core::Execution;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn config() -> GenConfig {
    GenConfig {
        seed: 3,
        video_count: 200,
        ..GenConfig::default()
    }
}

fn generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate");
    g.sample_size(20);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_benchmark_with(black_box(&config()), exec).unwrap())
        });
    }
    g.finish();
}

fn stages(c: &mut Criterion) {
    let bench = generate_benchmark_with(&config(), Execution::Sequential).unwrap();
    let distorted = distort_benchmark(
        &bench,
        &[Distortion::compression(0.85), Distortion::offset(0.5)],
        Execution::Sequential,
    )
    .unwrap();
    let cfg = PipelineConfig::default();
    let full = Variant::Full.stages();
    let mut g = c.benchmark_group("run_stages");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_stages(black_box(&distorted), &full, &cfg, "jpeg", "full", exec).unwrap())
        });
    }
    g.finish();
}

fn calibration(c: &mut Criterion) {
    let bench = generate_benchmark_with(&config(), Execution::Sequential).unwrap();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for r in &bench {
        scores.extend(r.audio.values().iter().zip(r.visual.values()).map(|(a, v)| 0.5 * (a + v)));
        labels.extend_from_slice(r.labels.values());
    }
    let cfg = CalibrationConfig::default();
    let mut g = c.benchmark_group("fit_temperature");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fit_temperature_with(black_box(&scores), &labels, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, generation, stages, calibration);
criterion_main!(benches);

//! Hot-path benchmarks: the member-batched MLP forward/backward, one wave
//! solver step, and spatial context queries.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rand::Rng;
use sesdi_core::model::{
    backward_context, forward_context, LocScale, SesdiParams, SesdiSpec,
};
use sesdi_core::seed::rng_for;
use sesdi_core::survey::{query_context, GeometryAwareTrace, Survey};
use sesdi_core::velocity::VelocityModel;
use sesdi_core::wavesim::{SimConfig, SpaceOrder, WaveField};

fn desk_traces(n: usize) -> Vec<GeometryAwareTrace> {
    let mut rng = rng_for(1, "bench.traces");
    (0..n)
        .map(|i| GeometryAwareTrace {
            data: (0..400).map(|_| rng.random_range(-1.0..1.0)).collect(),
            src: [rng.random_range(0.0..750.0), 0.0, 0.0],
            rcv: [rng.random_range(0.0..750.0), 0.0, 0.0],
            shot_id: (i / 60) as u32,
            rcv_index: (i % 60) as u32,
        })
        .collect()
}

fn bench_network(c: &mut Criterion) {
    let spec = SesdiSpec::desk_2d(51, 76);
    let mut rng = rng_for(2, "bench.params");
    let params = SesdiParams::init(&spec, LocScale::identity(), &mut rng).unwrap();
    let traces = desk_traces(384);
    let refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
    c.bench_function("forward_context_384", |b| {
        b.iter(|| forward_context(black_box(&params), black_box(&refs)).unwrap())
    });
    let cache = forward_context(&params, &refs).unwrap();
    let grad = vec![1.0 / (51.0 * 76.0 * 1250.0); 51 * 76];
    c.bench_function("backward_context_384", |b| {
        b.iter(|| backward_context(black_box(&params), black_box(&cache), black_box(&grad)).unwrap())
    });
}

fn bench_wave_step(c: &mut Criterion) {
    let model = VelocityModel::uniform(vec![51, 76], 10.0, 3000.0).unwrap();
    let cfg = SimConfig {
        space_order: SpaceOrder::Eight,
        ..sesdi_core::pipeline::desk_sim_config()
    };
    let mut field = WaveField::new(&model, &cfg).unwrap();
    let src = field.grid_index([380.0, 0.0, 0.0], cfg.dx).unwrap();
    field.step(src, 1.0);
    c.bench_function("wave_step_91x116_order8", |b| {
        b.iter(|| {
            field.step(black_box(src), black_box(0.1));
        })
    });
}

fn bench_query(c: &mut Criterion) {
    let mut rng = rng_for(3, "bench.query");
    let traces: Vec<GeometryAwareTrace> = (0..5000)
        .map(|i| GeometryAwareTrace {
            data: vec![0.0; 4],
            src: [rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0), 0.0],
            rcv: [rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0), 0.0],
            shot_id: (i / 50) as u32,
            rcv_index: (i % 50) as u32,
        })
        .collect();
    let survey = Survey::new(traces, 1e-3).unwrap();
    c.bench_function("query_context_5000", |b| {
        b.iter(|| query_context(black_box(&survey), black_box((1000.0, 1000.0)), black_box(400.0)).unwrap())
    });
}

criterion_group!(benches, bench_network, bench_wave_step, bench_query);
criterion_main!(benches);

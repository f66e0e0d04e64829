use criterion::{criterion_group, criterion_main, Criterion};

use marxbench_bench::losses;
use marxbench_core::eval::{dm_test, gr_fluctuation, mcs, McsConfig};

fn statistics(c: &mut Criterion) {
    let l = losses(2, 456, 1);
    let d: Vec<f64> = l[0].iter().zip(&l[1]).map(|(a, b)| a - b).collect();
    c.bench_function("dm_test_h12", |b| b.iter(|| dm_test(&d, 12, false).unwrap()));
    c.bench_function("gr_fluctuation_136", |b| b.iter(|| gr_fluctuation(&d, 136, 3).unwrap()));

    let panel = losses(30, 456, 2);
    let mut group = c.benchmark_group("model_confidence_set");
    group.sample_size(10);
    group.bench_function("30_models_1000_reps", |b| {
        b.iter(|| mcs(&panel, &McsConfig { reps: 1000, ..Default::default() }, 3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, statistics);
criterion_main!(benches);

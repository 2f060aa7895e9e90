//! Sequential versus parallel replicate folding on the jump chain of f1.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dustcoal::engine::{simulate_f1, EngineError, F1Path};
use dustcoal::replicate::fold_sequential;
use dustcoal::stream::derive_stream;
use dustcoal::{MeasureSpec, Weight};

fn step(spec: &MeasureSpec) -> impl Fn(&mut f64, u64) -> Result<(), EngineError> + Sync + '_ {
    move |acc, r| {
        let path: F1Path<f64> = simulate_f1(spec, 5, &mut derive_stream(1, r))?;
        *acc += path.values.last().map_or(1.0, Weight::to_f64);
        Ok(())
    }
}

fn bench(c: &mut Criterion) {
    let spec = MeasureSpec::parse("beta:3:1:1").unwrap();
    let mut group = c.benchmark_group("f1_jump_chain");
    group.sample_size(10);
    for reps in [4_096u64, 32_768] {
        group.bench_with_input(BenchmarkId::new("sequential", reps), &reps, |b, &reps| {
            b.iter(|| fold_sequential(reps, || 0.0, step(&spec), |a, b| a + b).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", reps), &reps, |b, &reps| {
            b.iter(|| dustcoal::replicate::fold_parallel(reps, || 0.0, step(&spec), |a, b| a + b).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

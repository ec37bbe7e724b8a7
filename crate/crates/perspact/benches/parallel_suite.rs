//! Compares suite throughput across worker counts. Degree 1 is the
//! sequential fallback path; higher degrees fan trials out over a rayon
//! pool. Trials are independent, so the suite should scale until trial
//! granularity runs out.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use perspact::harness::{run_suite, PolicyKind, RunConfig};

fn suite_config(policy: PolicyKind, trials: u32, parallel: usize) -> RunConfig {
    RunConfig {
        trials,
        generated: true,
        seed: 7,
        parallel,
        ..RunConfig::new(policy)
    }
}

fn bench_policy(c: &mut Criterion, policy: PolicyKind, trials: u32) {
    let mut group = c.benchmark_group(format!("suite/{policy}"));
    group.sample_size(10);
    group.throughput(Throughput::Elements(trials as u64 * 7));
    for degree in [1usize, 2, 4, 8] {
        group.bench_with_input(BenchmarkId::new("workers", degree), &degree, |b, &degree| {
            let config = suite_config(policy, trials, degree);
            b.iter(|| run_suite(&config, None).unwrap());
        });
    }
    group.finish();
}

fn benches(c: &mut Criterion) {
    // Greedy trials are cheap; plan-follower trials pay for an optimal
    // planner call each, which is where parallelism earns its keep.
    bench_policy(c, PolicyKind::Greedy, 32);
    bench_policy(c, PolicyKind::Plan, 32);
}

criterion_group!(parallel_suite, benches);
criterion_main!(parallel_suite);

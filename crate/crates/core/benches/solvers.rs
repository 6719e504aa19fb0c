use std::hint::black_box;

use capa_core::baselines::Scheme;
use capa_core::channel::capa_gram;
use capa_core::exec::Execution;
use capa_core::fp::{run_bcd_with, FpConfig};
use capa_core::sweep::{sample_scenario, run_sweep, ScenarioDefaults, SimConfig, SweepKind, SweepSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_fp(c: &mut Criterion) {
    let mut group = c.benchmark_group("fp_bcd");
    let defaults = ScenarioDefaults { num_luts: 10, num_eves: 5, ..ScenarioDefaults::default() };
    let scenario = sample_scenario(&defaults, 7).unwrap();
    let gram = capa_gram(&scenario).unwrap();
    let cfg = FpConfig { max_iters: 10, ..FpConfig::default() };
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new("k10_q5", name), |b| {
            b.iter(|| run_bcd_with(black_box(&gram), &gram.weights, gram.power_budget, &cfg, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("power_sweep");
    group.sample_size(10);
    let mut spec = SweepSpec::new(SweepKind::Power, SimConfig::default());
    spec.values = vec![10.0, 1e3];
    spec.trials = 16;
    spec.schemes = vec![Scheme::CapaFp, Scheme::CapaZf, Scheme::MimoZf];
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new("16_trials", name), |b| {
            b.iter(|| run_sweep(black_box(&spec), mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fp, bench_sweep);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pubfdr_cli::{run_sweep, SweepGrid};
use pubfdr_core::simulate::{run, PostSelectionSampler};
use pubfdr_core::{MixtureModel, SimulationConfig, SimulationMode, Spm};

fn config(mode: SimulationMode, spm: Spm) -> SimulationConfig {
    SimulationConfig {
        m: 5000,
        reps: 20,
        seed: 9,
        model: MixtureModel::from_power(0.93, 0.233, 0.05).unwrap(),
        spm,
        alpha: 0.05,
        lambda: 0.045,
        mode,
    }
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_5000x20");
    group.sample_size(20);
    for (name, spm) in [("two_step", Spm::two_step(0.05, 0.4).unwrap()), ("beta35", Spm::beta(35.0).unwrap())] {
        for (label, mode) in
            [("population", SimulationMode::Population), ("direct", SimulationMode::PostSelectionDirect)]
        {
            let cfg = config(mode, spm.clone());
            group.bench_function(format!("{name}/{label}"), |b| b.iter(|| run(black_box(&cfg)).unwrap()));
        }
    }
    group.finish();

    let m = MixtureModel::from_power(0.93, 0.233, 0.05).unwrap();
    let spm = Spm::beta(35.0).unwrap();
    c.bench_function("sampler_setup_beta35", |b| b.iter(|| PostSelectionSampler::new(&m, black_box(&spm)).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let text = include_str!("../../cli/configs/figure2.toml");
    let grid = SweepGrid::from_toml(text, None).unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(20);
    group.bench_function("figure2", |b| {
        b.iter_batched(|| grid.clone(), |g| run_sweep(&g).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, simulation, sweep);
criterion_main!(benches);

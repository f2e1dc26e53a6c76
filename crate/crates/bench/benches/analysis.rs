use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pubfdr_core::analysis::bias_from;
use pubfdr_core::quadrature::Integrator;
use pubfdr_core::{
    bias_beta_closed, bias_general, bias_two_step_closed, incomplete_beta, variance_approx, AnalysisPoint,
    MixtureModel, QuadratureMoments, Spm,
};

fn closed_forms(c: &mut Criterion) {
    let m = MixtureModel::from_power(0.8, 0.8, 0.05).unwrap();
    let low = MixtureModel::from_power(0.93, 0.233, 0.05).unwrap();
    c.bench_function("incomplete_beta", |b| {
        b.iter(|| incomplete_beta(black_box(0.045), black_box(0.486), black_box(35.0)))
    });
    c.bench_function("bias_two_step_closed", |b| {
        b.iter(|| bias_two_step_closed(0.05, black_box(0.035), &m, black_box(0.6)))
    });
    c.bench_function("bias_beta_closed", |b| {
        b.iter(|| bias_beta_closed(0.05, black_box(0.045), &low, black_box(35.0)))
    });
    let johnson = AnalysisPoint::new(0.05, 0.01, MixtureModel::from_power(0.93, 0.75, 0.05).unwrap(), Spm::johnson())
        .unwrap()
        .with_n(73);
    c.bench_function("bias_general_johnson", |b| b.iter(|| bias_general(black_box(&johnson))));
    c.bench_function("variance_approx_johnson", |b| b.iter(|| variance_approx(black_box(&johnson))));
}

fn quadrature(c: &mut Criterion) {
    let m = MixtureModel::from_power(0.93, 0.233, 0.05).unwrap();
    let spm = Spm::beta(35.0).unwrap();
    let mut group = c.benchmark_group("quadrature_bias_beta");
    for tol in [1e-8, 1e-10, 1e-13] {
        group.bench_function(format!("tol={tol:e}"), |b| {
            b.iter(|| {
                let q = QuadratureMoments::for_spm(&m, &spm, Integrator::with_tolerance(tol)).unwrap();
                bias_from(0.05, black_box(0.045), &q).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, closed_forms, quadrature);
criterion_main!(benches);

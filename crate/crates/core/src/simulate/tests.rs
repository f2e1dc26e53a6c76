use super::*;
use crate::analysis::{bias_general, true_fdr, AnalysisPoint};
use crate::special::incomplete_beta;

fn model(pi0: f64, gamma: f64) -> MixtureModel {
    MixtureModel::new(pi0, gamma).unwrap()
}

fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn no_selection_reproduces_the_mixture() {
    let m = model(0.6, 0.3);
    let n = 100_000;
    let s = sample_post_selection(&m, &Spm::uniform(), n, 1).unwrap();
    let d = ks_statistic(s.pvalues, |t| m.cdf(t).unwrap());
    assert!(d < ks_critical_1pct(n), "KS = {d}");

    let s = sample_post_selection(&m, &Spm::beta(1.0).unwrap(), n, 2).unwrap();
    let d = ks_statistic(s.pvalues, |t| m.cdf(t).unwrap());
    assert!(d < ks_critical_1pct(n), "KS = {d}");
}

#[test]
fn threshold_nulls_are_uniform_below_alpha() {
    let s = sample_post_selection(&model(0.5, 0.4), &Spm::threshold(0.05).unwrap(), 200_000, 3).unwrap();
    let nulls: Vec<f64> = s.pvalues.iter().zip(&s.is_null).filter(|(_, &n)| n).map(|(&p, _)| p).collect();
    assert!(nulls.iter().all(|&p| p < 0.05));
    let n = nulls.len();
    let d = ks_statistic(nulls, |t| (t / 0.05).min(1.0));
    assert!(d < ks_critical_1pct(n), "KS = {d}");
}

#[test]
fn johnson_tail_fraction_matches_moments() {
    let m = model(0.9, 0.2);
    let spm = Spm::johnson();
    let n = 400_000;
    let s = sample_post_selection(&m, &spm, n, 4).unwrap();
    let frac = s.pvalues.iter().filter(|&&p| p > 0.052).count() as f64 / n as f64;
    let want = spm.restricted_moment(&m, 0.052, 1.0, Component::Mixture).unwrap()
        / spm.restricted_moment(&m, 0.0, 1.0, Component::Mixture).unwrap();
    let se = (want * (1.0 - want) / n as f64).sqrt();
    assert!((frac - want).abs() < 3.0 * se, "{frac} vs {want} (se {se})");
}

#[test]
fn beta_alternative_follows_beta_law() {
    // selected alternatives under mu = (1-p)^(eta-1) are Beta(gamma, eta)
    let (gamma, eta) = (0.3, 12.0);
    let m = model(0.5, gamma);
    let s = sample_post_selection(&m, &Spm::beta(eta).unwrap(), 200_000, 5).unwrap();
    let alts: Vec<f64> = s.pvalues.iter().zip(&s.is_null).filter(|(_, &n)| !n).map(|(&p, _)| p).collect();
    let full = incomplete_beta(1.0, gamma, eta).unwrap();
    let n = alts.len();
    let d = ks_statistic(alts, |t| incomplete_beta(t, gamma, eta).unwrap() / full);
    assert!(d < ks_critical_1pct(n), "KS = {d}");

    let nulls: Vec<f64> = s.pvalues.iter().zip(&s.is_null).filter(|(_, &n)| n).map(|(&p, _)| p).collect();
    let n = nulls.len();
    let d = ks_statistic(nulls, |t| 1.0 - (1.0 - t).powf(eta));
    assert!(d < ks_critical_1pct(n), "KS = {d}");
}

#[test]
fn inverse_table_is_accurate() {
    let (gamma, eta) = (0.0745, 35.0);
    let inv = 1.0 / gamma;
    let table = InverseCdfTable::build(|u: f64| (1.0 - u.powf(inv).min(1.0)).powf(eta - 1.0), 1e-11).unwrap();
    let full = gamma * incomplete_beta(1.0, gamma, eta).unwrap();
    for i in 1..200 {
        let u = i as f64 / 200.0;
        let exact = gamma * incomplete_beta(u.powf(inv), gamma, eta).unwrap() / full;
        assert!((table.cdf(u) - exact).abs() < 1e-10, "u={u}");
        let back = table.cdf(table.invert(exact));
        assert!((back - exact).abs() < 1e-12);
    }

    // square-root behaviour at the right end still resolves
    let table = InverseCdfTable::build(|u: f64| (1.0 - u.powf(2.0)).max(0.0).sqrt(), 1e-11).unwrap();
    let exact = |u: f64| (u * (1.0 - u * u).sqrt() + u.asin()) / std::f64::consts::FRAC_PI_2;
    for i in 0..=100 {
        let u = i as f64 / 100.0;
        assert!((table.cdf(u) - exact(u)).abs() < 1e-10, "u={u}");
    }
}

#[test]
fn population_mode_matches_true_fdr() {
    let cfg = SimulationConfig {
        m: 100_000,
        reps: 200,
        seed: 7,
        model: model(0.5, 0.0),
        spm: Spm::uniform(),
        alpha: 0.05,
        lambda: 0.025,
        mode: SimulationMode::Population,
    };
    let r = run(&cfg).unwrap();
    let truth = true_fdr(&AnalysisPoint::new(0.05, 0.025, cfg.model, cfg.spm.clone()).unwrap()).unwrap();
    let fdr = r.empirical_fdr.unwrap();
    assert!((fdr - truth).abs() < 3.0 * r.mc_std_error_of_fdr.unwrap(), "{fdr} vs {truth}");
    assert!((truth - 0.047619).abs() < 1e-6);
    assert_eq!(r.replicates_with_zero_discoveries, 0);
    assert!((r.mean_n - 100_000.0).abs() < 1e-9);
}

#[test]
fn threshold_lfc_is_unbiased_in_population_mode() {
    let cfg = SimulationConfig {
        m: 20_000,
        reps: 300,
        seed: 8,
        model: model(0.8, 0.0),
        spm: Spm::threshold(0.05).unwrap(),
        alpha: 0.05,
        lambda: 0.02,
        mode: SimulationMode::Population,
    };
    let r = run(&cfg).unwrap();
    let truth = true_fdr(&AnalysisPoint::new(0.05, 0.02, cfg.model, cfg.spm.clone()).unwrap()).unwrap();
    let diff = r.empirical_mean_fdr_hat.unwrap() - truth;
    assert!(diff.abs() < 3.0 * r.mc_std_error_of_mean.unwrap(), "diff {diff}");
}

#[test]
fn direct_mode_bias_two_step() {
    let m = MixtureModel::from_power(0.8, 0.8, 0.05).unwrap();
    let spm = Spm::two_step(0.05, 0.4).unwrap();
    let point = AnalysisPoint::new(0.05, 0.045, m, spm.clone()).unwrap();
    let cfg = SimulationConfig {
        m: 2_000,
        reps: 500,
        seed: 9,
        model: m,
        spm,
        alpha: 0.05,
        lambda: 0.045,
        mode: SimulationMode::PostSelectionDirect,
    };
    let r = run(&cfg).unwrap();
    let emp = r.empirical_mean_fdr_hat.unwrap() - true_fdr(&point).unwrap();
    let bias = bias_general(&point).unwrap();
    assert!((emp - bias).abs() < 3.0 * r.mc_std_error_of_mean.unwrap(), "{emp} vs {bias}");
    assert_eq!(r.mean_n, 2000.0);
}

#[test]
fn zero_discoveries_are_counted_not_fatal() {
    // tiny populations under a harsh threshold rarely select anything
    let cfg = SimulationConfig {
        m: 1,
        reps: 50,
        seed: 10,
        model: model(0.99, 0.9),
        spm: Spm::threshold(0.001).unwrap(),
        alpha: 0.001,
        lambda: 0.0005,
        mode: SimulationMode::Population,
    };
    let r = run(&cfg).unwrap();
    assert!(r.replicates_with_zero_discoveries > 40);
    assert_eq!(r.reps, 50);
}

#[test]
fn runs_are_reproducible() {
    let cfg = SimulationConfig {
        m: 500,
        reps: 64,
        seed: 42,
        model: model(0.7, 0.2),
        spm: Spm::beta(10.0).unwrap(),
        alpha: 0.05,
        lambda: 0.02,
        mode: SimulationMode::PostSelectionDirect,
    };
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&cfg).unwrap());
    assert_eq!(a, serial);
    let other = run(&SimulationConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn config_validation() {
    let base = SimulationConfig {
        m: 10,
        reps: 1,
        seed: 0,
        model: model(0.5, 0.5),
        spm: Spm::johnson(),
        alpha: 0.05,
        lambda: 0.01,
        mode: SimulationMode::Population,
    };
    assert!(run(&SimulationConfig { m: 0, ..base.clone() }).is_err());
    assert!(run(&SimulationConfig { reps: 0, ..base.clone() }).is_err());
    assert!(run(&SimulationConfig { lambda: 0.05, ..base.clone() }).is_err());
    assert!(sample_post_selection(&base.model, &base.spm, 0, 1).is_err());
}

use pubfdr_core::analysis::bias_from;
use pubfdr_core::quadrature::Integrator;
use pubfdr_core::simulate::{run, sample_post_selection};
use pubfdr_core::{
    bias_general, estimate_with_sensitivity, true_fdr, AnalysisPoint, EstimateOptions, LambdaSpec, MixtureModel,
    QuadratureMoments, SelectedPvalues, SimulationConfig, SimulationMode, Spm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn spm_json_round_trip() {
    for spm in [Spm::johnson(), Spm::moss(), Spm::two_step(0.05, 0.3).unwrap(), Spm::beta(12.5).unwrap()] {
        let text = serde_json::to_string(&spm).unwrap();
        assert_eq!(serde_json::from_str::<Spm>(&text).unwrap(), spm, "{text}");
    }
    assert!(serde_json::from_str::<Spm>(r#"{"kind":"step","cuts":[0.05],"levels":[0.5,1.0]}"#).is_err());
    assert!(serde_json::from_str::<Spm>(r#"{"kind":"beta","eta":2,"extra":1}"#).is_err());
}

#[test]
fn general_bias_matches_quadrature_for_presets_without_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let alpha = rng.gen_range(0.02..0.1);
        let lambda = alpha * rng.gen_range(0.0..0.95);
        let m = MixtureModel::new(rng.gen_range(0.1..0.95), rng.gen_range(0.05..0.95)).unwrap();
        for spm in [Spm::johnson(), Spm::moss()] {
            let exact = bias_general(&AnalysisPoint::new(alpha, lambda, m, spm.clone()).unwrap()).unwrap();
            let q = QuadratureMoments::for_spm(&m, &spm, Integrator::with_tolerance(1e-13)).unwrap();
            let quad = bias_from(alpha, lambda, &q).unwrap();
            assert!((exact - quad).abs() < 1e-9, "{spm} alpha={alpha} lambda={lambda}: {exact} vs {quad}");
        }
    }
}

#[test]
fn corrected_estimate_recovers_true_fdr_on_a_large_sample() {
    let m = MixtureModel::from_power(0.8, 0.8, 0.05).unwrap();
    let spm = Spm::two_step(0.05, 0.4).unwrap();
    let sample = sample_post_selection(&m, &spm, 400_000, 5).unwrap();
    let data = SelectedPvalues::new(sample.pvalues).unwrap();
    let opts = EstimateOptions::new(0.05, LambdaSpec::Fixed(0.025));
    let r = estimate_with_sensitivity(&data, &opts, &m, &spm).unwrap();
    let truth = true_fdr(&AnalysisPoint::new(0.05, 0.025, m, spm).unwrap()).unwrap();
    let se = r.std_error.unwrap();
    let corrected = r.fdr_hat_corrected.unwrap();
    assert!((corrected - truth).abs() < 4.0 * se, "corrected {corrected}, truth {truth}, se {se}");
    assert!(r.bias.unwrap() < 0.0);
}

#[test]
fn simulation_report_serializes() {
    let config = SimulationConfig {
        m: 300,
        reps: 20,
        seed: 1,
        model: MixtureModel::new(0.5, 0.3).unwrap(),
        spm: Spm::beta(5.0).unwrap(),
        alpha: 0.05,
        lambda: 0.02,
        mode: SimulationMode::PostSelectionDirect,
    };
    let report = run(&config).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<pubfdr_core::SimulationReport>(&text).unwrap(), report);
    let config_text = serde_json::to_string(&config).unwrap();
    assert!(config_text.contains("\"post-selection-direct\""));
    assert_eq!(serde_json::from_str::<SimulationConfig>(&config_text).unwrap(), config);
}

//! Moment estimator of the FDR among selected p-values.
//!
//! Selected p-values at or below `alpha` are rescaled to `p / alpha`, and the
//! null proportion of the rescaled values is estimated from those above
//! `lambda / alpha`:
//!
//! `fdr_hat = #{lambda < p <= alpha} / (n' (1 - lambda / alpha))`

use serde::{Deserialize, Serialize};

use crate::analysis::{bias_general, variance_approx, AnalysisPoint};
use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::spm::Spm;

/// Observed (selected) p-values, each in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedPvalues {
    values: Vec<f64>,
    pub provenance: Option<String>,
}

impl SelectedPvalues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Domain { name: "p-value", value: bad, reason: "selected p-values must lie in (0, 1]" });
        }
        Ok(Self { values, provenance: None })
    }

    pub fn with_provenance(mut self, label: impl Into<String>) -> Self {
        self.provenance = Some(label.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which p-values a quantile-based `lambda` is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileBasis {
    /// Only the selected p-values at or below alpha.
    #[default]
    Discoveries,
    /// Every selected p-value.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaSpec {
    Fixed(f64),
    Quantile { q: f64, basis: QuantileBasis },
}

/// How a p-value equal to `lambda` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Upper window `(lambda, alpha]`.
    #[default]
    Open,
    /// Upper window `[lambda, alpha]`.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub alpha: f64,
    pub lambda: LambdaSpec,
    pub tie_rule: TieRule,
    /// Clamp reported estimates to [0, 1].
    pub clamp: bool,
}

impl EstimateOptions {
    pub fn new(alpha: f64, lambda: LambdaSpec) -> Self {
        Self { alpha, lambda, tie_rule: TieRule::Open, clamp: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub alpha: f64,
    pub lambda_used: f64,
    pub n: usize,
    pub n_prime: usize,
    /// p-values counted in the upper window.
    pub upper_count: usize,
    pub fdr_hat: f64,
    pub bias: Option<f64>,
    pub std_error: Option<f64>,
    pub fdr_hat_corrected: Option<f64>,
}

/// Counts of selected p-values in `[0, lambda]`, the upper window and `(alpha, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WindowCounts {
    pub lower: usize,
    pub upper: usize,
    pub above: usize,
}

impl WindowCounts {
    /// Tallies `values`; zeros are allowed, as the point-mass alternative produces them.
    pub fn tally(values: &[f64], alpha: f64, lambda: f64, tie_rule: TieRule) -> Self {
        let mut counts = Self::default();
        for &p in values {
            if p > alpha {
                counts.above += 1;
            } else if p > lambda || (tie_rule == TieRule::Closed && p == lambda) {
                counts.upper += 1;
            } else {
                counts.lower += 1;
            }
        }
        counts
    }

    pub fn n_prime(&self) -> usize {
        self.lower + self.upper
    }

    /// The estimate, or `None` without discoveries.
    pub fn fdr_hat(&self, alpha: f64, lambda: f64) -> Option<f64> {
        let n_prime = self.n_prime();
        (n_prime > 0).then(|| self.upper as f64 / (n_prime as f64 * (1.0 - lambda / alpha)))
    }
}

/// Type-7 (linear interpolation) sample quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain { name: "quantile", value: q, reason: "must lie in [0, 1]" });
    }
    if values.is_empty() {
        return Err(Error::Config("quantile of an empty set".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn resolve_lambda(values: &[f64], alpha: f64, spec: LambdaSpec) -> Result<f64> {
    let lambda = match spec {
        LambdaSpec::Fixed(l) => l,
        LambdaSpec::Quantile { q, basis } => {
            let pool: Vec<f64> = match basis {
                QuantileBasis::Discoveries => values.iter().copied().filter(|&p| p <= alpha).collect(),
                QuantileBasis::All => values.to_vec(),
            };
            quantile(&pool, q)?
        }
    };
    if !(lambda >= 0.0 && lambda < alpha) {
        return Err(Error::Domain {
            name: "lambda",
            value: lambda,
            reason: "resolved lambda must satisfy 0 <= lambda < alpha",
        });
    }
    Ok(lambda)
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn estimate(data: &SelectedPvalues, opts: &EstimateOptions) -> Result<EstimateReport> {
    let alpha = opts.alpha;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain { name: "alpha", value: alpha, reason: "must lie in (0, 1]" });
    }
    let lambda = resolve_lambda(data.values(), alpha, opts.lambda)?;
    let counts = WindowCounts::tally(data.values(), alpha, lambda, opts.tie_rule);
    let fdr_hat = counts.fdr_hat(alpha, lambda).ok_or(Error::NoDiscoveries { alpha })?;
    Ok(EstimateReport {
        alpha,
        lambda_used: lambda,
        n: data.len(),
        n_prime: counts.n_prime(),
        upper_count: counts.upper,
        fdr_hat: if opts.clamp { clamp_unit(fdr_hat) } else { fdr_hat },
        bias: None,
        std_error: None,
        fdr_hat_corrected: None,
    })
}

/// Estimate plus the bias and standard error implied by an assumed mixture
/// and selection model, and the bias-corrected estimate.
pub fn estimate_with_sensitivity(
    data: &SelectedPvalues,
    opts: &EstimateOptions,
    model: &MixtureModel,
    spm: &Spm,
) -> Result<EstimateReport> {
    let raw = estimate(data, &EstimateOptions { clamp: false, ..*opts })?;
    let point = AnalysisPoint::new(opts.alpha, raw.lambda_used, *model, spm.clone())?.with_n(raw.n as u64);
    let bias = bias_general(&point)?;
    let std_error = variance_approx(&point)?.std_error;
    let corrected = raw.fdr_hat - bias;
    let finish = |x: f64| if opts.clamp { clamp_unit(x) } else { x };
    Ok(EstimateReport {
        fdr_hat: finish(raw.fdr_hat),
        bias: Some(bias),
        std_error: Some(std_error),
        fdr_hat_corrected: Some(finish(corrected)),
        ..raw
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixed(alpha: f64, lambda: f64) -> EstimateOptions {
        EstimateOptions::new(alpha, LambdaSpec::Fixed(lambda))
    }

    #[test]
    fn hand_computed_case() {
        let data = SelectedPvalues::new(vec![0.01, 0.02, 0.03, 0.04]).unwrap();
        let r = estimate(&data, &fixed(0.05, 0.025)).unwrap();
        assert_eq!(r.n_prime, 4);
        assert_eq!(r.upper_count, 2);
        assert_eq!(r.fdr_hat, 1.0);

        let data = SelectedPvalues::new(vec![0.001, 0.002, 0.3]).unwrap();
        let r = estimate(&data, &fixed(0.05, 0.025)).unwrap();
        assert_eq!(r.fdr_hat, 0.0);
        assert_eq!((r.n, r.n_prime), (3, 2));
    }

    #[test]
    fn errors() {
        let data = SelectedPvalues::new(vec![0.2, 0.5]).unwrap();
        assert!(matches!(estimate(&data, &fixed(0.05, 0.01)), Err(Error::NoDiscoveries { .. })));
        let data = SelectedPvalues::new(vec![0.01, 0.04]).unwrap();
        assert!(estimate(&data, &fixed(0.05, 0.05)).is_err());
        let q = EstimateOptions::new(0.05, LambdaSpec::Quantile { q: 1.0, basis: QuantileBasis::All });
        let data = SelectedPvalues::new(vec![0.01, 0.04, 0.5]).unwrap();
        assert!(estimate(&data, &q).is_err());
        assert!(SelectedPvalues::new(vec![0.0]).is_err());
        assert!(SelectedPvalues::new(vec![1.5]).is_err());
        assert!(SelectedPvalues::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn tie_rules() {
        let data = SelectedPvalues::new(vec![0.01, 0.025, 0.025, 0.04, 0.05]).unwrap();
        let open = estimate(&data, &fixed(0.05, 0.025)).unwrap();
        let closed = estimate(&data, &EstimateOptions { tie_rule: TieRule::Closed, ..fixed(0.05, 0.025) }).unwrap();
        assert_eq!(open.upper_count, 2);
        assert_eq!(closed.upper_count, 4);
    }

    #[test]
    fn quantile_lambda() {
        let data = SelectedPvalues::new(vec![0.001, 0.002, 0.004, 0.01, 0.02, 0.6, 0.9]).unwrap();
        let opts = EstimateOptions::new(0.05, LambdaSpec::Quantile { q: 0.5, basis: QuantileBasis::Discoveries });
        assert_eq!(estimate(&data, &opts).unwrap().lambda_used, 0.004);
        let opts = EstimateOptions::new(0.05, LambdaSpec::Quantile { q: 0.75, basis: QuantileBasis::Discoveries });
        // h = 4 * 0.75 = 3 -> 0.01
        assert_eq!(estimate(&data, &opts).unwrap().lambda_used, 0.01);
        assert!((quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn clamping() {
        let data = SelectedPvalues::new(vec![0.01, 0.03, 0.04, 0.045]).unwrap();
        let r = estimate(&data, &fixed(0.05, 0.025)).unwrap();
        assert_eq!(r.fdr_hat, 1.5);
        let r = estimate(&data, &EstimateOptions { clamp: true, ..fixed(0.05, 0.025) }).unwrap();
        assert_eq!(r.fdr_hat, 1.0);
    }

    #[test]
    fn sensitivity_attaches_bias_and_error() {
        let data = SelectedPvalues::new(vec![0.001, 0.003, 0.01, 0.02, 0.03, 0.04, 0.2]).unwrap();
        let lfc = MixtureModel::new(0.6, 0.0).unwrap();
        let r = estimate_with_sensitivity(&data, &fixed(0.05, 0.02), &lfc, &Spm::threshold(0.05).unwrap()).unwrap();
        assert!(r.bias.unwrap().abs() < 1e-15);
        assert!((r.fdr_hat_corrected.unwrap() - r.fdr_hat).abs() < 1e-15);
        assert!(r.std_error.unwrap() > 0.0);

        let m = MixtureModel::from_power(0.8, 0.8, 0.05).unwrap();
        let spm = Spm::two_step(0.05, 0.4).unwrap();
        let r = estimate_with_sensitivity(&data, &fixed(0.05, 0.035), &m, &spm).unwrap();
        let b = r.bias.unwrap();
        assert!((b + 0.0350).abs() < 1e-4);
        assert_eq!(r.fdr_hat_corrected.unwrap(), r.fdr_hat - b);
    }

    fn dataset() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(prop_oneof![1e-6f64..0.05, 1e-6f64..=1.0], 1..60)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn scale_equivalence(values in dataset(), alpha in 0.01f64..0.2, frac in 0.0f64..0.95) {
            let lambda = alpha * frac;
            let raw = SelectedPvalues::new(values.clone()).unwrap();
            let adjusted: Vec<f64> = values.iter().map(|p| p / alpha).filter(|&p| p <= 1.0).collect();
            prop_assume!(adjusted.len() == values.iter().filter(|&&p| p <= alpha).count());
            prop_assume!(!adjusted.is_empty());
            let a = estimate(&raw, &fixed(alpha, lambda)).unwrap();
            let b = estimate(&SelectedPvalues::new(adjusted).unwrap(), &fixed(1.0, lambda / alpha)).unwrap();
            prop_assert_eq!(a.upper_count, b.upper_count);
            prop_assert_eq!(a.n_prime, b.n_prime);
            prop_assert_eq!(a.fdr_hat, b.fdr_hat);
            prop_assert!(a.fdr_hat >= 0.0 && a.fdr_hat <= alpha / (alpha - lambda) * (1.0 + 1e-12));
        }

        #[test]
        fn order_and_tail_invariance(mut values in dataset(), extra in proptest::collection::vec(0.0501f64..=1.0, 0..20), seed in any::<u64>()) {
            prop_assume!(values.iter().any(|&p| p <= 0.05));
            let base = estimate(&SelectedPvalues::new(values.clone()).unwrap(), &fixed(0.05, 0.02)).unwrap();
            values.extend(extra);
            // deterministic shuffle
            let mut state = seed | 1;
            for i in (1..values.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                values.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let other = estimate(&SelectedPvalues::new(values).unwrap(), &fixed(0.05, 0.02)).unwrap();
            prop_assert_eq!(base.fdr_hat, other.fdr_hat);
        }

        #[test]
        fn closed_rule_counts_at_least_open(values in dataset()) {
            let open = WindowCounts::tally(&values, 0.05, 0.02, TieRule::Open);
            let closed = WindowCounts::tally(&values, 0.05, 0.02, TieRule::Closed);
            prop_assert!(closed.upper >= open.upper);
            if !values.contains(&0.02) {
                prop_assert_eq!(closed, open);
            }
        }
    }
}

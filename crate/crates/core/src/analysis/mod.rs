//! Post-selection FDR, bias and variance of the moment estimator.
//!
//! Every quantity is a ratio of `mu`-weighted moments of the p-value law.
//! [`ExactMoments`] evaluates them in closed form for the step and beta
//! selection models; [`QuadratureMoments`] integrates any non-increasing
//! weight numerically, and doubles as an independent check of the closed
//! forms.
//!
//! `lambda` is always on the original p-value scale, `0 <= lambda < alpha`.

mod closed;

pub use crate::special::{complete_beta, incomplete_beta};
pub use closed::{
    beta_selection_probabilities, bias_beta_closed, bias_threshold_closed, bias_two_step_closed,
    two_step_selection_probabilities, SelectionProbabilities,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::quadrature::Integrator;
use crate::spm::{Component, Spm};

/// Where the bias, true FDR and variance are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPoint {
    pub alpha: f64,
    pub lambda: f64,
    pub model: MixtureModel,
    pub spm: Spm,
    /// Total number of selected p-values; only the variance needs it.
    pub n: Option<u64>,
}

impl AnalysisPoint {
    pub fn new(alpha: f64, lambda: f64, model: MixtureModel, spm: Spm) -> Result<Self> {
        check_levels(alpha, lambda)?;
        Ok(Self { alpha, lambda, model, spm, n: None })
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = Some(n);
        self
    }

    pub fn moments(&self) -> ExactMoments<'_> {
        ExactMoments::new(&self.model, &self.spm)
    }
}

pub(crate) fn check_levels(alpha: f64, lambda: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain { name: "alpha", value: alpha, reason: "must lie strictly inside (0, 1)" });
    }
    if !(lambda >= 0.0 && lambda < alpha) {
        return Err(Error::Domain { name: "lambda", value: lambda, reason: "must satisfy 0 <= lambda < alpha" });
    }
    Ok(())
}

/// Source of restricted moments `E[mu(P) 1{a <= P <= b}]`.
///
/// Component moments are weighted by their prior probability (see
/// [`Component`]). An atom at zero belongs to `[a, b]` iff `a == 0`.
pub trait SelectionMoments {
    fn moment(&self, a: f64, b: f64, component: Component) -> Result<f64>;

    /// Moment over the estimator's upper window `(lambda, alpha]`.
    fn upper_window(&self, lambda: f64, alpha: f64) -> Result<f64> {
        if lambda == 0.0 {
            Ok(self.moment(0.0, alpha, Component::Mixture)? - self.moment(0.0, 0.0, Component::Mixture)?)
        } else {
            self.moment(lambda, alpha, Component::Mixture)
        }
    }
}

/// Closed-form moments of a step or beta selection model.
#[derive(Debug, Clone, Copy)]
pub struct ExactMoments<'a> {
    model: &'a MixtureModel,
    spm: &'a Spm,
}

impl<'a> ExactMoments<'a> {
    pub fn new(model: &'a MixtureModel, spm: &'a Spm) -> Self {
        Self { model, spm }
    }
}

impl SelectionMoments for ExactMoments<'_> {
    fn moment(&self, a: f64, b: f64, component: Component) -> Result<f64> {
        self.spm.restricted_moment(self.model, a, b, component)
    }
}

/// Moments of an arbitrary non-increasing weight by adaptive quadrature.
///
/// The alternative density `gamma t^(gamma-1)` is singular at zero, so the
/// alternative part is integrated in `u = t^gamma`, where it becomes
/// `integral mu(u^(1/gamma)) du` with a bounded integrand.
pub struct QuadratureMoments<'a, W> {
    model: &'a MixtureModel,
    weight: W,
    breakpoints: Vec<f64>,
    integrator: Integrator,
}

impl<'a, W: Fn(f64) -> f64> QuadratureMoments<'a, W> {
    /// `breakpoints` lists the discontinuities of `weight` in (0, 1).
    pub fn new(model: &'a MixtureModel, weight: W, breakpoints: Vec<f64>, integrator: Integrator) -> Result<Self> {
        if model.is_least_favorable() {
            return Err(Error::Domain {
                name: "gamma",
                value: 0.0,
                reason: "quadrature needs an absolutely continuous alternative",
            });
        }
        Ok(Self { model, weight, breakpoints, integrator })
    }
}

impl<'a> QuadratureMoments<'a, Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>> {
    pub fn for_spm(model: &'a MixtureModel, spm: &'a Spm, integrator: Integrator) -> Result<Self> {
        let breakpoints = spm.breakpoints().to_vec();
        Self::new(model, Box::new(move |p| spm.weight(p)), breakpoints, integrator)
    }
}

impl<W: Fn(f64) -> f64> SelectionMoments for QuadratureMoments<'_, W> {
    fn moment(&self, a: f64, b: f64, component: Component) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::Domain { name: "a", value: a, reason: "need 0 <= a <= b <= 1" });
        }
        let pi0 = self.model.pi0();
        let gamma = self.model.gamma();
        let mut total = 0.0;
        if component != Component::Alternative {
            let r = self.integrator.integrate(&self.weight, a, b, &self.breakpoints)?;
            total += pi0 * r.value;
        }
        if component != Component::Null {
            let inv = 1.0 / gamma;
            let mapped: Vec<f64> = self.breakpoints.iter().map(|c| c.powf(gamma)).collect();
            let r = self.integrator.integrate(
                |u: f64| (self.weight)(u.powf(inv).min(1.0)),
                a.powf(gamma),
                b.powf(gamma),
                &mapped,
            )?;
            total += (1.0 - pi0) * r.value;
        }
        Ok(total)
    }
}

/// `integral_a^b mu(t) f_component(t) dt` by quadrature, at the default
/// 1e-10 absolute tolerance.
pub fn quadrature_moment(spm: &Spm, model: &MixtureModel, a: f64, b: f64, component: Component) -> Result<f64> {
    QuadratureMoments::for_spm(model, spm, Integrator::default())?.moment(a, b, component)
}

/// Post-selection FDR `P(H = 0 | selected, P <= alpha)`.
pub fn true_fdr(point: &AnalysisPoint) -> Result<f64> {
    true_fdr_from(point.alpha, &point.moments())
}

pub fn true_fdr_from<M: SelectionMoments + ?Sized>(alpha: f64, moments: &M) -> Result<f64> {
    let discoveries = moments.moment(0.0, alpha, Component::Mixture)?;
    if discoveries <= 0.0 {
        return Err(Error::Degenerate("no selectable p-values at or below alpha"));
    }
    Ok(moments.moment(0.0, alpha, Component::Null)? / discoveries)
}

/// Expected value of the estimator, `alpha/(alpha-lambda) * P(lambda < P <= alpha | P <= alpha, selected)`.
pub fn expected_estimate_from<M: SelectionMoments + ?Sized>(alpha: f64, lambda: f64, moments: &M) -> Result<f64> {
    check_levels(alpha, lambda)?;
    let discoveries = moments.moment(0.0, alpha, Component::Mixture)?;
    if discoveries <= 0.0 {
        return Err(Error::Degenerate("no selectable p-values at or below alpha"));
    }
    Ok(alpha / (alpha - lambda) * moments.upper_window(lambda, alpha)? / discoveries)
}

/// Bias of the estimator under an arbitrary selection model, from exact moments.
pub fn bias_general(point: &AnalysisPoint) -> Result<f64> {
    bias_from(point.alpha, point.lambda, &point.moments())
}

pub fn bias_from<M: SelectionMoments + ?Sized>(alpha: f64, lambda: f64, moments: &M) -> Result<f64> {
    check_levels(alpha, lambda)?;
    let discoveries = moments.moment(0.0, alpha, Component::Mixture)?;
    if discoveries <= 0.0 {
        return Err(Error::Degenerate("no selectable p-values at or below alpha"));
    }
    let window = moments.upper_window(lambda, alpha)?;
    let nulls = moments.moment(0.0, alpha, Component::Null)?;
    Ok((alpha / (alpha - lambda) * window - nulls) / discoveries)
}

/// Delta-method variance approximation for `n` selected p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl VarianceReport {
    /// `(alpha/(alpha-lambda))^2 q1 q2 / (n (q1+q2)^3)`.
    pub fn from_probabilities(alpha: f64, lambda: f64, q1: f64, q2: f64, n: u64) -> Result<Self> {
        check_levels(alpha, lambda)?;
        if n == 0 {
            return Err(Error::Domain { name: "n", value: 0.0, reason: "need at least one selected p-value" });
        }
        for (name, q) in [("q1", q1), ("q2", q2)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Domain { name, value: q, reason: "must be a probability" });
            }
        }
        let q12 = q1 + q2;
        if q12 <= 0.0 {
            return Err(Error::Degenerate("no selected mass at or below alpha"));
        }
        if q12 > 1.0 + 1e-12 {
            return Err(Error::Domain { name: "q1 + q2", value: q12, reason: "must not exceed 1" });
        }
        let scale = alpha / (alpha - lambda);
        let variance = scale * scale * q1 * q2 / (n as f64 * q12 * q12 * q12);
        Ok(Self { q1, q2, q3: 1.0 - q12, variance, std_error: variance.sqrt() })
    }
}

/// Variance approximation at `point`; requires `point.n`.
pub fn variance_approx(point: &AnalysisPoint) -> Result<VarianceReport> {
    let n = point.n.ok_or(Error::Config("variance needs the selected count n".into()))?;
    variance_from(point.alpha, point.lambda, n, &point.moments())
}

pub fn variance_from<M: SelectionMoments + ?Sized>(
    alpha: f64,
    lambda: f64,
    n: u64,
    moments: &M,
) -> Result<VarianceReport> {
    check_levels(alpha, lambda)?;
    let total = moments.moment(0.0, 1.0, Component::Mixture)?;
    if total <= 0.0 {
        return Err(Error::Degenerate("selection model assigns zero total weight"));
    }
    let q1 = moments.moment(0.0, lambda, Component::Mixture)? / total;
    let q2 = moments.upper_window(lambda, alpha)? / total;
    VarianceReport::from_probabilities(alpha, lambda, q1.min(1.0), q2.min(1.0), n)
}

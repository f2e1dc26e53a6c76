//! Closed-form bias and selection probabilities for the parametric
//! selection models.

use serde::{Deserialize, Serialize};

use super::check_levels;
use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::special::{complete_beta, incomplete_beta};

/// Bias when selection is exactly `p <= alpha`. Non-negative, and zero for
/// the least favorable alternative.
pub fn bias_threshold_closed(alpha: f64, lambda: f64, model: &MixtureModel) -> Result<f64> {
    check_levels(alpha, lambda)?;
    let (pi0, g) = (model.pi0(), model.gamma());
    let ag = alpha.powf(g);
    Ok(alpha / (alpha - lambda) * (1.0 - pi0) * (ag - lambda.powf(g)) / (pi0 * alpha + (1.0 - pi0) * ag))
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { name: "rho", value: rho, reason: "must lie in (0, 1]" })
    }
}

/// Bias under the two-step model: weight 1 below `alpha/2`, `rho` up to `alpha`.
pub fn bias_two_step_closed(alpha: f64, lambda: f64, model: &MixtureModel, rho: f64) -> Result<f64> {
    check_levels(alpha, lambda)?;
    check_rho(rho)?;
    let b = two_step_branches(alpha, lambda, model, rho);
    Ok(if lambda >= alpha / 2.0 { b.upper } else { b.lower } / b.denominator)
}

/// Numerators for `lambda >= alpha/2` (`upper`) and `lambda < alpha/2`
/// (`lower`), both evaluated at the given `lambda`, and the shared denominator.
pub(crate) struct TwoStepBranches {
    pub upper: f64,
    pub lower: f64,
    pub denominator: f64,
}

pub(crate) fn two_step_branches(alpha: f64, lambda: f64, model: &MixtureModel, rho: f64) -> TwoStepBranches {
    let (pi0, g) = (model.pi0(), model.gamma());
    let half = alpha / 2.0;
    let ag = alpha.powf(g);
    let hg = half.powf(g);
    let lg = lambda.powf(g);
    let tail = pi0 * (1.0 + rho) / 2.0;
    TwoStepBranches {
        upper: alpha * (pi0 * rho + (1.0 - pi0) * rho * (ag - lg) / (alpha - lambda) - tail),
        lower: alpha
            * (pi0 / (alpha - lambda) * ((rho + 1.0) * half - lambda)
                + (1.0 - pi0) / (alpha - lambda) * (rho * (ag - hg) + hg - lg)
                - tail),
        denominator: alpha * pi0 * (1.0 + rho) / 2.0 + (1.0 - pi0) * (hg + rho * (ag - hg)),
    }
}

fn check_beta_args(model: &MixtureModel, eta: f64) -> Result<()> {
    if model.is_least_favorable() {
        return Err(Error::Domain {
            name: "gamma",
            value: 0.0,
            reason: "B(x; 0, eta) diverges; use the general bias with the point-mass convention",
        });
    }
    if !(eta >= 1.0 && eta.is_finite()) {
        return Err(Error::Domain { name: "eta", value: eta, reason: "must be finite and >= 1" });
    }
    Ok(())
}

/// Bias under the beta-kernel model `mu(p) = (1-p)^(eta-1)`, via the
/// incomplete beta function. Requires `gamma > 0`.
pub fn bias_beta_closed(alpha: f64, lambda: f64, model: &MixtureModel, eta: f64) -> Result<f64> {
    check_levels(alpha, lambda)?;
    check_beta_args(model, eta)?;
    let (pi0, g) = (model.pi0(), model.gamma());
    let b_alpha = incomplete_beta(alpha, g, eta)?;
    let b_lambda = incomplete_beta(lambda, g, eta)?;
    let null_below_alpha = pi0 / eta * (1.0 - (1.0 - alpha).powf(eta));
    let window =
        pi0 / eta * ((1.0 - lambda).powf(eta) - (1.0 - alpha).powf(eta)) + (1.0 - pi0) * g * (b_alpha - b_lambda);
    let numerator = alpha / (alpha - lambda) * window - null_below_alpha;
    let denominator = null_below_alpha + (1.0 - pi0) * g * b_alpha;
    Ok(numerator / denominator)
}

/// Post-selection probabilities of `[0, lambda]`, `(lambda, alpha]` and `(alpha, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionProbabilities {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// Probabilities under the two-step model (nothing above `alpha` is selected).
pub fn two_step_selection_probabilities(
    alpha: f64,
    lambda: f64,
    model: &MixtureModel,
    rho: f64,
) -> Result<SelectionProbabilities> {
    check_levels(alpha, lambda)?;
    check_rho(rho)?;
    let (pi0, g) = (model.pi0(), model.gamma());
    let half = alpha / 2.0;
    let (ag, hg, lg) = (alpha.powf(g), half.powf(g), lambda.powf(g));
    let total = pi0 * (rho + 1.0) * half + (1.0 - pi0) * (rho * (ag - hg) + hg);
    let (q1, q2) = if lambda >= half {
        (
            pi0 * (half + rho * (lambda - half)) + (1.0 - pi0) * (hg + rho * (lg - hg)),
            pi0 * rho * (alpha - lambda) + (1.0 - pi0) * rho * (ag - lg),
        )
    } else {
        (
            pi0 * lambda + (1.0 - pi0) * lg,
            pi0 * (rho * half + half - lambda) + (1.0 - pi0) * (rho * (ag - hg) + hg - lg),
        )
    };
    Ok(SelectionProbabilities { q1: q1 / total, q2: q2 / total, q3: 0.0 })
}

/// Probabilities under the beta-kernel model. Requires `gamma > 0`.
pub fn beta_selection_probabilities(
    alpha: f64,
    lambda: f64,
    model: &MixtureModel,
    eta: f64,
) -> Result<SelectionProbabilities> {
    check_levels(alpha, lambda)?;
    check_beta_args(model, eta)?;
    let (pi0, g) = (model.pi0(), model.gamma());
    let total = pi0 / eta + (1.0 - pi0) * g * complete_beta(g, eta);
    let b_lambda = incomplete_beta(lambda, g, eta)?;
    let b_alpha = incomplete_beta(alpha, g, eta)?;
    let q1 = pi0 / eta * (1.0 - (1.0 - lambda).powf(eta)) + (1.0 - pi0) * g * b_lambda;
    let q2 = pi0 / eta * ((1.0 - lambda).powf(eta) - (1.0 - alpha).powf(eta)) + (1.0 - pi0) * g * (b_alpha - b_lambda);
    let (q1, q2) = (q1 / total, q2 / total);
    Ok(SelectionProbabilities { q1, q2, q3: 1.0 - q1 - q2 })
}

//! Two-group p-value mixture with a beta alternative.
//!
//! Null p-values are uniform. Under the alternative, `P(P <= t) = t^gamma`
//! with `0 <= gamma < 1`, so the marginal CDF is
//! `F(t) = pi0 * t + (1 - pi0) * t^gamma`. `gamma = 0` is the least
//! favorable configuration: every alternative p-value is exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Null proportion and alternative exponent of the beta mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pi0: f64,
    gamma: f64,
}

/// Pointwise densities of the null, alternative and marginal laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Densities {
    pub null: f64,
    pub alternative: f64,
    pub mixture: f64,
}

impl MixtureModel {
    pub fn new(pi0: f64, gamma: f64) -> Result<Self> {
        if !(pi0 > 0.0 && pi0 < 1.0) {
            return Err(Error::Domain {
                name: "pi0",
                value: pi0,
                reason: "null proportion must lie strictly inside (0, 1)",
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain {
                name: "gamma",
                value: gamma,
                reason: "alternative exponent must lie in [0, 1)",
            });
        }
        Ok(Self { pi0, gamma })
    }

    /// Builds the model from the power `alpha^gamma` of a level-`alpha` test.
    pub fn from_power(pi0: f64, power: f64, alpha: f64) -> Result<Self> {
        Self::new(pi0, gamma_from_power(power, alpha)?)
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// True when the alternative is a point mass at zero.
    pub fn is_least_favorable(&self) -> bool {
        self.gamma == 0.0
    }

    /// `P(P <= alpha | H = 1)`.
    pub fn power(&self, alpha: f64) -> f64 {
        alpha.powf(self.gamma)
    }

    /// Alternative CDF `t^gamma`, with the atom convention `F1(0) = 0`.
    pub fn alternative_cdf(&self, t: f64) -> Result<f64> {
        check_unit("t", t)?;
        Ok(if t == 0.0 { 0.0 } else { t.powf(self.gamma) })
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        let alt = self.alternative_cdf(t)?;
        Ok(self.pi0 * t + (1.0 - self.pi0) * alt)
    }

    /// Densities at `t`. Undefined at `t = 0` and for the point-mass alternative.
    pub fn densities(&self, t: f64) -> Result<Densities> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain { name: "t", value: t, reason: "densities are defined on (0, 1]" });
        }
        if self.is_least_favorable() {
            return Err(Error::Domain {
                name: "gamma",
                value: self.gamma,
                reason: "the point-mass alternative has no density",
            });
        }
        let alternative = self.gamma * t.powf(self.gamma - 1.0);
        Ok(Densities { null: 1.0, alternative, mixture: self.pi0 + (1.0 - self.pi0) * alternative })
    }
}

/// Inverts `power = alpha^gamma`.
///
/// Power 1 maps to the least favorable `gamma = 0`. Power at or below `alpha`
/// would give `gamma >= 1`, where the alternative is no longer stochastically
/// smaller than the null, and is rejected.
pub fn gamma_from_power(power: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain { name: "alpha", value: alpha, reason: "must lie strictly inside (0, 1)" });
    }
    if !(power > 0.0 && power <= 1.0) {
        return Err(Error::Domain { name: "power", value: power, reason: "must lie in (0, 1]" });
    }
    if power <= alpha {
        return Err(Error::Domain { name: "power", value: power, reason: "power must exceed alpha (gamma < 1)" });
    }
    if power == 1.0 {
        return Ok(0.0);
    }
    Ok(power.ln() / alpha.ln())
}

//! Non-regularized lower incomplete beta function.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `B(x; a, b) = integral_0^x t^(a-1) (1-t)^(b-1) dt`.
///
/// Evaluated with the Lentz continued fraction on whichever tail converges
/// faster, reflecting through `B(x; a, b) = B(a, b) - B(1 - x; b, a)`.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain { name: "x", value: x, reason: "must lie in [0, 1]" });
    }
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain { name, value: v, reason: "beta shape parameters must be positive and finite" });
        }
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(complete_beta(a, b));
    }
    if x <= (a + 1.0) / (a + b + 2.0) {
        lower_tail(x, a, b)
    } else {
        Ok(complete_beta(a, b) - lower_tail(1.0 - x, b, a)?)
    }
}

/// `B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)`.
pub fn complete_beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

fn lower_tail(x: f64, a: f64, b: f64) -> Result<f64> {
    let front = (a * x.ln() + b * (-x).ln_1p()).exp() / a;
    Ok(front * continued_fraction(x, a, b)?)
}

fn continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Degenerate("incomplete beta continued fraction did not converge"))
}

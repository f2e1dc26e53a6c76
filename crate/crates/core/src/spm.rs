//! Selection probability models.
//!
//! A selection model `mu(p)` is a non-increasing weight proportional to the
//! probability that a p-value equal to `p` is published. Only ratios of
//! `mu`-weighted moments enter downstream formulas, so the weights are kept
//! unnormalized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::mixture::MixtureModel;
use crate::special::incomplete_beta;

/// Which part of the mixture a moment is taken over.
///
/// Component moments carry their prior weight: `Null` integrates against
/// `pi0 * f0` and `Alternative` against `(1 - pi0) * f1`, so that
/// `Null + Alternative = Mixture`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Null,
    Alternative,
    Mixture,
}

/// Piecewise-constant selection weights.
///
/// Piece `i` covers `[cuts[i-1], cuts[i])` with `cuts[-1] = 0`; the final
/// piece is closed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSpm {
    cuts: Vec<f64>,
    levels: Vec<f64>,
}

/// Beta-kernel selection weight `mu(p) = (1 - p)^(eta - 1)`, `eta >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSpm {
    eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpmSpec", into = "SpmSpec")]
pub enum Spm {
    Step(StepSpm),
    Beta(BetaSpm),
}

/// Serialized form: `{kind = "step", cuts = [...], levels = [...]}` or
/// `{kind = "beta", eta = ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpmSpec {
    Step { cuts: Vec<f64>, levels: Vec<f64> },
    Beta { eta: f64 },
}

impl StepSpm {
    pub fn new(cuts: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != cuts.len() + 1 {
            return Err(Error::InvalidSpm(format!(
                "{} cut points need {} levels, got {}",
                cuts.len(),
                cuts.len() + 1,
                levels.len()
            )));
        }
        if cuts.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::InvalidSpm("cut points must lie strictly inside (0, 1)".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpm("cut points must be strictly ascending".into()));
        }
        if levels.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidSpm("levels must be finite and non-negative".into()));
        }
        if levels.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpm("levels must be non-increasing".into()));
        }
        if levels[0] <= 0.0 {
            return Err(Error::InvalidSpm("at least one level must be positive".into()));
        }
        Ok(Self { cuts, levels })
    }

    /// No selection: `mu = 1` everywhere.
    pub fn uniform() -> Self {
        Self { cuts: vec![], levels: vec![1.0] }
    }

    /// Publish only when `p < alpha`.
    pub fn threshold(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha], vec![1.0, 0.0])
    }

    /// Weight 1 below 0.052 and 0.006 above.
    pub fn johnson() -> Self {
        Self { cuts: vec![0.052], levels: vec![1.0, 0.006] }
    }

    /// Three steps at 0.025 and 0.05 with weights 1, 0.7, 0.1.
    pub fn moss() -> Self {
        Self { cuts: vec![0.025, 0.05], levels: vec![1.0, 0.7, 0.1] }
    }

    /// Weight 1 below `alpha / 2`, `rho` on `[alpha / 2, alpha)`, 0 above.
    pub fn two_step(alpha: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Domain { name: "rho", value: rho, reason: "must lie in (0, 1]" });
        }
        Self::new(vec![alpha / 2.0, alpha], vec![1.0, rho, 0.0])
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn mu(&self, p: f64) -> f64 {
        self.levels[self.cuts.partition_point(|&c| c <= p)]
    }

    /// `(lo, hi, level)` for every piece.
    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let lows = std::iter::once(0.0).chain(self.cuts.iter().copied());
        let highs = self.cuts.iter().copied().chain(std::iter::once(1.0));
        lows.zip(highs).zip(self.levels.iter().copied()).map(|((lo, hi), l)| (lo, hi, l))
    }

    fn moment(&self, model: &MixtureModel, a: f64, b: f64, component: Component) -> f64 {
        let pi0 = model.pi0();
        let gamma = model.gamma();
        let want_null = component != Component::Alternative;
        let want_alt = component != Component::Null;
        let mut total = 0.0;
        for (lo, hi, level) in self.pieces() {
            let lo = lo.max(a);
            let hi = hi.min(b);
            if hi <= lo || level == 0.0 {
                continue;
            }
            let mut mass = 0.0;
            if want_null {
                mass += pi0 * (hi - lo);
            }
            if want_alt && gamma > 0.0 {
                mass += (1.0 - pi0) * (hi.powf(gamma) - lo.powf(gamma));
            }
            total += level * mass;
        }
        if want_alt && model.is_least_favorable() && a == 0.0 {
            total += (1.0 - pi0) * self.levels[0];
        }
        total
    }
}

impl BetaSpm {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta >= 1.0 && eta.is_finite()) {
            return Err(Error::Domain { name: "eta", value: eta, reason: "must be finite and >= 1" });
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn mu(&self, p: f64) -> f64 {
        if self.eta == 1.0 {
            1.0
        } else {
            (1.0 - p).powf(self.eta - 1.0)
        }
    }

    fn moment(&self, model: &MixtureModel, a: f64, b: f64, component: Component) -> Result<f64> {
        let pi0 = model.pi0();
        let gamma = model.gamma();
        let eta = self.eta;
        let mut total = 0.0;
        if component != Component::Alternative {
            // (1-a)^eta - (1-b)^eta, written to keep precision for small a, b
            let ua = (eta * (-a).ln_1p()).exp();
            let ub = (eta * (-b).ln_1p()).exp();
            total += pi0 * (ua - ub) / eta;
        }
        if component != Component::Null {
            if gamma > 0.0 {
                let inc = incomplete_beta(b, gamma, eta)? - incomplete_beta(a, gamma, eta)?;
                total += (1.0 - pi0) * gamma * inc;
            } else if a == 0.0 {
                total += 1.0 - pi0;
            }
        }
        Ok(total)
    }
}

impl Spm {
    pub fn uniform() -> Self {
        Spm::Step(StepSpm::uniform())
    }

    pub fn threshold(alpha: f64) -> Result<Self> {
        StepSpm::threshold(alpha).map(Spm::Step)
    }

    pub fn johnson() -> Self {
        Spm::Step(StepSpm::johnson())
    }

    pub fn moss() -> Self {
        Spm::Step(StepSpm::moss())
    }

    pub fn two_step(alpha: f64, rho: f64) -> Result<Self> {
        StepSpm::two_step(alpha, rho).map(Spm::Step)
    }

    pub fn beta(eta: f64) -> Result<Self> {
        BetaSpm::new(eta).map(Spm::Beta)
    }

    /// Selection weight at `p`.
    pub fn mu(&self, p: f64) -> Result<f64> {
        check_unit("p", p)?;
        Ok(self.weight(p))
    }

    /// Unchecked weight for integrands that already stay inside [0, 1].
    pub(crate) fn weight(&self, p: f64) -> f64 {
        match self {
            Spm::Step(s) => s.mu(p),
            Spm::Beta(s) => s.mu(p),
        }
    }

    /// Largest weight, attained at `p = 0`.
    pub fn max_weight(&self) -> f64 {
        self.weight(0.0)
    }

    /// Discontinuities of `mu` inside (0, 1).
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Spm::Step(s) => s.cuts(),
            Spm::Beta(_) => &[],
        }
    }

    /// `E[mu(P) 1{a <= P <= b}]` over the requested component, in closed form.
    ///
    /// With the point-mass alternative the atom at zero contributes
    /// `(1 - pi0) * mu(0)` exactly when `a == 0`.
    pub fn restricted_moment(&self, model: &MixtureModel, a: f64, b: f64, component: Component) -> Result<f64> {
        check_unit("a", a)?;
        check_unit("b", b)?;
        if a > b {
            return Err(Error::Domain { name: "a", value: a, reason: "lower limit exceeds upper limit" });
        }
        match self {
            Spm::Step(s) => Ok(s.moment(model, a, b, component)),
            Spm::Beta(s) => s.moment(model, a, b, component),
        }
    }
}

impl TryFrom<SpmSpec> for Spm {
    type Error = Error;

    fn try_from(spec: SpmSpec) -> Result<Self> {
        match spec {
            SpmSpec::Step { cuts, levels } => StepSpm::new(cuts, levels).map(Spm::Step),
            SpmSpec::Beta { eta } => Spm::beta(eta),
        }
    }
}

impl From<Spm> for SpmSpec {
    fn from(spm: Spm) -> Self {
        match spm {
            Spm::Step(s) => SpmSpec::Step { cuts: s.cuts, levels: s.levels },
            Spm::Beta(s) => SpmSpec::Beta { eta: s.eta },
        }
    }
}

impl fmt::Display for Spm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spm::Beta(b) => write!(f, "beta({})", b.eta),
            Spm::Step(s) => {
                let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                write!(f, "step(cuts={}; levels={})", join(&s.cuts), join(&s.levels))
            }
        }
    }
}

/// Parses the named presets:
/// `uniform`, `johnson`, `moss`, `threshold(alpha)`, `two-step(alpha, rho)`,
/// and `beta:eta` (or `beta(eta)`).
impl FromStr for Spm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidSpm(format!("unrecognized selection model `{s}`"));
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(bad)?;
                let args =
                    inner.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
                (name.trim(), args)
            }
            None => match s.split_once(':') {
                Some((name, arg)) => (name.trim(), vec![arg.trim().parse::<f64>().map_err(|_| bad())?]),
                None => (s, vec![]),
            },
        };
        match (name.to_ascii_lowercase().as_str(), args.as_slice()) {
            ("uniform" | "none", []) => Ok(Spm::uniform()),
            ("johnson", []) => Ok(Spm::johnson()),
            ("moss", []) => Ok(Spm::moss()),
            ("threshold", [alpha]) => Spm::threshold(*alpha),
            ("two-step" | "two_step", [alpha, rho]) => Spm::two_step(*alpha, *rho),
            ("beta", [eta]) => Spm::beta(*eta),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(pi0: f64, gamma: f64) -> MixtureModel {
        MixtureModel::new(pi0, gamma).unwrap()
    }

    #[test]
    fn preset_weights() {
        let j = Spm::johnson();
        assert_eq!(j.mu(0.051).unwrap(), 1.0);
        assert_eq!(j.mu(0.053).unwrap(), 0.006);
        assert!((j.mu(0.051).unwrap() / j.mu(0.053).unwrap() - 166.67).abs() < 0.01);
        assert_eq!(j.mu(0.052).unwrap(), 0.006);
        assert_eq!(j.mu(1.0).unwrap(), 0.006);

        let m = Spm::moss();
        assert_eq!(m.mu(0.03).unwrap(), 0.7);
        assert_eq!(m.mu(0.01).unwrap(), 1.0);
        assert_eq!(m.mu(0.5).unwrap(), 0.1);

        let b = Spm::beta(1.0).unwrap();
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(b.mu(p).unwrap(), 1.0);
        }
        assert!(b.mu(1.5).is_err());

        let t = Spm::threshold(0.05).unwrap();
        assert_eq!(t.mu(0.0499).unwrap(), 1.0);
        assert_eq!(t.mu(0.05).unwrap(), 0.0);
    }

    #[test]
    fn rejects_invalid_steps() {
        assert!(StepSpm::new(vec![0.5], vec![1.0]).is_err());
        assert!(StepSpm::new(vec![0.5], vec![0.5, 1.0]).is_err());
        assert!(StepSpm::new(vec![0.5, 0.2], vec![1.0, 0.5, 0.1]).is_err());
        assert!(StepSpm::new(vec![1.0], vec![1.0, 0.5]).is_err());
        assert!(StepSpm::new(vec![0.5], vec![0.0, 0.0]).is_err());
        assert!(StepSpm::new(vec![0.5], vec![1.0, -0.1]).is_err());
        assert!(Spm::two_step(0.05, 0.0).is_err());
        assert!(Spm::beta(0.5).is_err());
    }

    #[test]
    fn moment_examples() {
        let m = model(0.3, 0.4);
        let total = Spm::uniform().restricted_moment(&m, 0.0, 1.0, Component::Mixture).unwrap();
        assert!((total - 1.0).abs() < 1e-15);

        let t = Spm::threshold(0.05).unwrap();
        let v = t.restricted_moment(&model(0.5, 0.5), 0.0, 0.05, Component::Mixture).unwrap();
        assert!((v - (0.5 * 0.05 + 0.5 * 0.05f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.13680).abs() < 1e-5);

        let b = Spm::beta(2.0).unwrap();
        let v = b.restricted_moment(&model(0.5, 0.0), 0.0, 0.05, Component::Mixture).unwrap();
        assert!((v - 0.524375).abs() < 1e-15);
        let v = b.restricted_moment(&model(0.5, 0.0), 0.01, 0.05, Component::Alternative).unwrap();
        assert_eq!(v, 0.0);

        assert!(t.restricted_moment(&m, 0.5, 0.2, Component::Null).is_err());
        assert!(t.restricted_moment(&m, 0.0, 1.2, Component::Null).is_err());
    }

    #[test]
    fn parses_presets_and_specs() {
        assert_eq!("johnson".parse::<Spm>().unwrap(), Spm::johnson());
        assert_eq!("moss".parse::<Spm>().unwrap(), Spm::moss());
        assert_eq!("threshold(0.05)".parse::<Spm>().unwrap(), Spm::threshold(0.05).unwrap());
        assert_eq!("two-step(0.05, 0.4)".parse::<Spm>().unwrap(), Spm::two_step(0.05, 0.4).unwrap());
        assert_eq!("beta:35".parse::<Spm>().unwrap(), Spm::beta(35.0).unwrap());
        assert_eq!("beta(35)".parse::<Spm>().unwrap(), Spm::beta(35.0).unwrap());
        assert!("threshold".parse::<Spm>().is_err());
        assert!("beta:x".parse::<Spm>().is_err());
        assert!("wat".parse::<Spm>().is_err());

        let s: Spm = serde_json::from_str(r#"{"kind":"step","cuts":[0.025,0.05],"levels":[1,0.7,0.1]}"#).unwrap();
        assert_eq!(s, Spm::moss());
        let s: Spm = serde_json::from_str(r#"{"kind":"beta","eta":35}"#).unwrap();
        assert_eq!(s, Spm::beta(35.0).unwrap());
        assert!(serde_json::from_str::<Spm>(r#"{"kind":"step","cuts":[0.5],"levels":[0.1,1]}"#).is_err());
        assert_eq!(serde_json::to_string(&Spm::beta(2.0).unwrap()).unwrap(), r#"{"kind":"beta","eta":2.0}"#);
    }

    fn any_spm() -> impl Strategy<Value = Spm> {
        prop_oneof![
            Just(Spm::johnson()),
            Just(Spm::moss()),
            Just(Spm::uniform()),
            (0.01f64..0.2).prop_map(|a| Spm::threshold(a).unwrap()),
            (0.01f64..0.2, 0.01f64..=1.0).prop_map(|(a, r)| Spm::two_step(a, r).unwrap()),
            (1.0f64..60.0).prop_map(|e| Spm::beta(e).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn mu_is_non_increasing(spm in any_spm(), p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(spm.mu(lo).unwrap() >= spm.mu(hi).unwrap());
        }

        #[test]
        fn moments_are_additive_and_decompose(
            spm in any_spm(),
            pi0 in 0.01f64..0.99,
            gamma in prop_oneof![Just(0.0), 0.01f64..0.99],
            mut cuts in proptest::collection::vec(0.0f64..=1.0, 3),
        ) {
            cuts.sort_by(f64::total_cmp);
            let [a, b, c] = [cuts[0], cuts[1], cuts[2]];
            prop_assume!(b > 0.0);
            let m = model(pi0, gamma);
            for comp in [Component::Null, Component::Alternative, Component::Mixture] {
                let whole = spm.restricted_moment(&m, a, c, comp).unwrap();
                let parts = spm.restricted_moment(&m, a, b, comp).unwrap()
                    + spm.restricted_moment(&m, b, c, comp).unwrap();
                prop_assert!((whole - parts).abs() < 1e-12, "{comp:?}: {whole} vs {parts}");
            }
            let mix = spm.restricted_moment(&m, a, c, Component::Mixture).unwrap();
            let null = spm.restricted_moment(&m, a, c, Component::Null).unwrap();
            let alt = spm.restricted_moment(&m, a, c, Component::Alternative).unwrap();
            prop_assert!((mix - null - alt).abs() < 1e-12);
        }
    }
}

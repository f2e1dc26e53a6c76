//! Monte Carlo ground truth for the selection model.
//!
//! Two modes are offered. `Population` draws complete `(H, P)` populations of
//! size `m`, selects each p-value with probability `mu(P) / mu(0)` and applies
//! the estimator to whatever survives, so the number selected is random.
//! `PostSelectionDirect` draws exactly `m` selected p-values from the
//! post-selection law, which is the setting of the delta-method variance.
//!
//! Every replicate owns a ChaCha8 stream keyed by `(seed, replicate)`, so
//! results do not depend on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::check_levels;
use crate::error::{Error, Result};
use crate::estimator::WindowCounts;
use crate::mixture::MixtureModel;
use crate::quadrature::{kronrod_panel, Integrator};
use crate::spm::{Component, Spm};
use crate::sum::neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMode {
    Population,
    PostSelectionDirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Population size (population mode) or selected count (direct mode).
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub model: MixtureModel,
    pub spm: Spm,
    pub alpha: f64,
    pub lambda: f64,
    pub mode: SimulationMode,
}

/// Moments over replicates with at least one selected discovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub reps: usize,
    pub replicates_with_zero_discoveries: usize,
    pub empirical_fdr: Option<f64>,
    pub mc_std_error_of_fdr: Option<f64>,
    pub empirical_mean_fdr_hat: Option<f64>,
    pub empirical_var_fdr_hat: Option<f64>,
    pub mc_std_error_of_mean: Option<f64>,
    pub mean_n: f64,
    pub mean_n_prime: f64,
}

/// Selected p-values together with their hidden null labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub pvalues: Vec<f64>,
    pub is_null: Vec<bool>,
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        check_levels(self.alpha, self.lambda)?;
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        Ok(())
    }
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct Replicate {
    n: usize,
    counts: WindowCounts,
    false_discoveries: usize,
}

impl Replicate {
    fn record(&mut self, p: f64, is_null: bool, alpha: f64, lambda: f64) {
        self.n += 1;
        if p > alpha {
            self.counts.above += 1;
        } else {
            if is_null {
                self.false_discoveries += 1;
            }
            if p > lambda {
                self.counts.upper += 1;
            } else {
                self.counts.lower += 1;
            }
        }
    }
}

pub fn run(config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    let alpha = config.alpha;
    let lambda = config.lambda;
    let outcomes: Vec<Replicate> = match config.mode {
        SimulationMode::Population => {
            let pi0 = config.model.pi0();
            let gamma = config.model.gamma();
            let inv_gamma = if gamma > 0.0 { 1.0 / gamma } else { 0.0 };
            let max_weight = config.spm.max_weight();
            (0..config.reps as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replicate_rng(config.seed, r);
                    let mut rep = Replicate::default();
                    for _ in 0..config.m {
                        let is_null = rng.gen::<f64>() < pi0;
                        let u: f64 = rng.gen();
                        let p = if is_null {
                            u
                        } else if gamma == 0.0 {
                            0.0
                        } else {
                            u.powf(inv_gamma)
                        };
                        if rng.gen::<f64>() * max_weight < config.spm.weight(p) {
                            rep.record(p, is_null, alpha, lambda);
                        }
                    }
                    rep
                })
                .collect()
        }
        SimulationMode::PostSelectionDirect => {
            let sampler = PostSelectionSampler::new(&config.model, &config.spm)?;
            (0..config.reps as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replicate_rng(config.seed, r);
                    let mut rep = Replicate::default();
                    for _ in 0..config.m {
                        let (p, is_null) = sampler.draw(&mut rng);
                        rep.record(p, is_null, alpha, lambda);
                    }
                    rep
                })
                .collect()
        }
    };
    Ok(summarize(&outcomes, alpha, lambda))
}

fn mean_and_var(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let k = values.len() as f64;
    let mean = neumaier(values.iter().copied()) / k;
    let var = (values.len() > 1).then(|| neumaier(values.iter().map(|v| (v - mean) * (v - mean))) / (k - 1.0));
    (Some(mean), var)
}

fn summarize(outcomes: &[Replicate], alpha: f64, lambda: f64) -> SimulationReport {
    let mut fdp = Vec::with_capacity(outcomes.len());
    let mut fdr_hat = Vec::with_capacity(outcomes.len());
    for rep in outcomes {
        if let Some(est) = rep.counts.fdr_hat(alpha, lambda) {
            fdp.push(rep.false_discoveries as f64 / rep.counts.n_prime() as f64);
            fdr_hat.push(est);
        }
    }
    let reps = outcomes.len();
    let (empirical_fdr, fdp_var) = mean_and_var(&fdp);
    let (mean_hat, var_hat) = mean_and_var(&fdr_hat);
    let se = |var: Option<f64>, k: usize| var.map(|v| (v / k as f64).sqrt());
    SimulationReport {
        reps,
        replicates_with_zero_discoveries: reps - fdr_hat.len(),
        empirical_fdr,
        mc_std_error_of_fdr: se(fdp_var, fdp.len()),
        empirical_mean_fdr_hat: mean_hat,
        empirical_var_fdr_hat: var_hat,
        mc_std_error_of_mean: se(var_hat, fdr_hat.len()),
        mean_n: neumaier(outcomes.iter().map(|r| r.n as f64)) / reps as f64,
        mean_n_prime: neumaier(outcomes.iter().map(|r| r.counts.n_prime() as f64)) / reps as f64,
    }
}

/// I.i.d. draws from the post-selection law, with hidden null labels.
pub fn sample_post_selection(model: &MixtureModel, spm: &Spm, count: usize, seed: u64) -> Result<LabeledSample> {
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    let sampler = PostSelectionSampler::new(model, spm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pvalues, is_null) = (0..count).map(|_| sampler.draw(&mut rng)).unzip();
    Ok(LabeledSample { pvalues, is_null })
}

/// Inverse-CDF sampler for `f(t | selected) = mu(t) f(t) / E[mu(P)]`.
///
/// The label is drawn first with probabilities proportional to the component
/// moments `pi0 E_0[mu]` and `(1 - pi0) E_1[mu]`, then the p-value from the
/// selected component law.
#[derive(Debug, Clone)]
pub struct PostSelectionSampler {
    null_probability: f64,
    null: ComponentSampler,
    alternative: ComponentSampler,
}

impl PostSelectionSampler {
    pub fn new(model: &MixtureModel, spm: &Spm) -> Result<Self> {
        let null_mass = spm.restricted_moment(model, 0.0, 1.0, Component::Null)?;
        let alt_mass = spm.restricted_moment(model, 0.0, 1.0, Component::Alternative)?;
        let total = null_mass + alt_mass;
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Degenerate("selection model assigns zero total weight"));
        }
        let gamma = model.gamma();
        let null = match spm {
            Spm::Step(s) => ComponentSampler::pieces(s.cuts(), s.levels(), None),
            Spm::Beta(b) => ComponentSampler::Kernel { eta: b.eta() },
        };
        let alternative = if model.is_least_favorable() {
            ComponentSampler::Atom
        } else {
            match spm {
                Spm::Step(s) => ComponentSampler::pieces(s.cuts(), s.levels(), Some(gamma)),
                Spm::Beta(b) if b.eta() == 1.0 => ComponentSampler::pieces(&[], &[1.0], Some(gamma)),
                Spm::Beta(b) => {
                    let (inv, e1) = (1.0 / gamma, b.eta() - 1.0);
                    let weight = move |u: f64| (1.0 - u.powf(inv).min(1.0)).powf(e1);
                    ComponentSampler::Table(InverseCdfTable::build(weight, 1e-11)?, Some(gamma))
                }
            }
        };
        Ok(Self { null_probability: null_mass / total, null, alternative })
    }

    pub fn null_probability(&self) -> f64 {
        self.null_probability
    }

    /// Returns `(p, is_null)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        let is_null = rng.gen::<f64>() < self.null_probability;
        let u: f64 = rng.gen();
        let p = if is_null { self.null.invert(u) } else { self.alternative.invert(u) };
        (p, is_null)
    }
}

#[derive(Debug, Clone)]
enum ComponentSampler {
    /// Point mass at zero.
    Atom,
    /// Piecewise-uniform in `c = t^gamma` (or `c = t` when `gamma` is `None`).
    Pieces { lows: Vec<f64>, levels: Vec<f64>, cumulative: Vec<f64>, gamma: Option<f64> },
    /// Density proportional to `(1 - t)^(eta - 1)`.
    Kernel { eta: f64 },
    /// Tabulated inverse CDF in `u = t^gamma`.
    Table(InverseCdfTable, Option<f64>),
}

impl ComponentSampler {
    fn pieces(cuts: &[f64], levels: &[f64], gamma: Option<f64>) -> Self {
        let map = |t: f64| gamma.map_or(t, |g| t.powf(g));
        let edges: Vec<f64> =
            std::iter::once(0.0).chain(cuts.iter().copied()).chain(std::iter::once(1.0)).map(map).collect();
        let mut cumulative = Vec::with_capacity(levels.len());
        let mut acc = 0.0;
        for (w, &level) in edges.windows(2).zip(levels) {
            acc += level * (w[1] - w[0]);
            cumulative.push(acc);
        }
        Self::Pieces { lows: edges[..levels.len()].to_vec(), levels: levels.to_vec(), cumulative, gamma }
    }

    fn invert(&self, u: f64) -> f64 {
        match self {
            Self::Atom => 0.0,
            Self::Pieces { lows, levels, cumulative, gamma } => {
                let target = u * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= target).min(levels.len() - 1);
                let before = if i == 0 { 0.0 } else { cumulative[i - 1] };
                let hi = lows.get(i + 1).copied().unwrap_or(1.0);
                let c = (lows[i] + (target - before) / levels[i]).min(hi);
                gamma.map_or(c, |g| c.powf(1.0 / g))
            }
            Self::Kernel { eta } => -((-u).ln_1p() / eta).exp_m1(),
            Self::Table(table, gamma) => {
                let c = table.invert(u);
                gamma.map_or(c, |g| c.powf(1.0 / g))
            }
        }
    }
}

/// Inverse CDF of a bounded non-negative density on [0, 1], tabulated on an
/// adaptive grid with cubic Hermite interpolation of the CDF inside each cell.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    edges: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl InverseCdfTable {
    /// Refines until the interpolated CDF at every cell midpoint is within
    /// `tol` (relative to the total mass) of its quadrature value.
    pub fn build<F: Fn(f64) -> f64>(density: F, tol: f64) -> Result<Self> {
        let total = Integrator::with_tolerance(1e-14).integrate(&density, 0.0, 1.0, &[])?.value;
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Degenerate("density has zero mass"));
        }
        let abs_tol = tol * total;
        const SEED_CELLS: usize = 64;
        const MAX_DEPTH: u32 = 48;

        let mut edges = vec![0.0];
        let mut masses = Vec::new();
        // depth-first, left to right, so cells come out ordered
        let mut stack: Vec<(f64, f64, u32)> = (0..SEED_CELLS)
            .rev()
            .map(|i| (i as f64 / SEED_CELLS as f64, (i + 1) as f64 / SEED_CELLS as f64, 0))
            .collect();
        while let Some((lo, hi, depth)) = stack.pop() {
            let (mass, err) = kronrod_panel(&density, lo, hi);
            let mid = 0.5 * (lo + hi);
            let (left, _) = kronrod_panel(&density, lo, mid);
            let interp = hermite(0.5, hi - lo, mass, density(lo), density(hi));
            let ok = (interp - left).abs() <= abs_tol && err <= abs_tol;
            if ok || depth >= MAX_DEPTH || !(mid > lo && mid < hi) {
                edges.push(hi);
                masses.push(mass);
            } else {
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        let mut cumulative = Vec::with_capacity(masses.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        let mut comp = 0.0;
        for m in masses {
            // Kahan
            let y = m - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            cumulative.push(acc);
        }
        let density = edges.iter().map(|&x| density(x)).collect();
        Ok(Self { edges, density, cumulative })
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    /// Tabulated CDF, normalized to 1 at the right end.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = (self.edges.partition_point(|&e| e <= x).max(1) - 1).min(self.cells() - 1);
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        let mass = self.cumulative[k + 1] - self.cumulative[k];
        let local = hermite((x - lo) / (hi - lo), hi - lo, mass, self.density[k], self.density[k + 1]);
        (self.cumulative[k] + local) / self.cumulative[self.cells()]
    }

    pub fn invert(&self, u: f64) -> f64 {
        let total = self.cumulative[self.cells()];
        let target = u * total;
        let k = (self.cumulative.partition_point(|&c| c <= target).max(1) - 1).min(self.cells() - 1);
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        let h = hi - lo;
        let mass = self.cumulative[k + 1] - self.cumulative[k];
        let (d0, d1) = (self.density[k], self.density[k + 1]);
        let want = target - self.cumulative[k];
        if mass <= 0.0 {
            return lo;
        }
        // safeguarded Newton on the cell's Hermite cubic
        let (mut a, mut b) = (0.0, 1.0);
        let mut s = (want / mass).clamp(0.0, 1.0);
        for _ in 0..50 {
            let f = hermite(s, h, mass, d0, d1) - want;
            if f > 0.0 {
                b = s;
            } else {
                a = s;
            }
            let slope = hermite_slope(s, h, mass, d0, d1);
            let mut next = if slope > 0.0 { s - f / slope } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - s).abs() <= 1e-15 {
                s = next;
                break;
            }
            s = next;
        }
        lo + s * h
    }
}

/// Hermite interpolant of the within-cell CDF at relative position `s`.
fn hermite(s: f64, h: f64, mass: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * mass + (s3 - s2) * h * d1
}

/// Derivative of [`hermite`] with respect to `s`.
fn hermite_slope(s: f64, h: f64, mass: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    (3.0 * s2 - 4.0 * s + 1.0) * h * d0 + (-6.0 * s2 + 6.0 * s) * mass + (3.0 * s2 - 2.0 * s) * h * d1
}

#[cfg(test)]
mod tests;

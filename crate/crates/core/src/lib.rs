//! False discovery rate estimation from selected (published) p-values.
//!
//! The crate covers the two-group p-value mixture with a beta alternative,
//! selection probability models, the moment estimator computed on
//! `p / alpha`, and the bias and variance that estimator picks up when the
//! assumed selection rule differs from the real one. A Monte Carlo simulator
//! provides brute-force ground truth for every analytic quantity.

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod mixture;
pub mod quadrature;
pub mod simulate;
pub mod special;
pub mod spm;
mod sum;

pub use analysis::{
    bias_beta_closed, bias_general, bias_threshold_closed, bias_two_step_closed, true_fdr, variance_approx,
    AnalysisPoint, ExactMoments, QuadratureMoments, SelectionMoments, VarianceReport,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate, estimate_with_sensitivity, EstimateOptions, EstimateReport, LambdaSpec, QuantileBasis, SelectedPvalues,
    TieRule,
};
pub use mixture::{gamma_from_power, MixtureModel};
pub use simulate::{SimulationConfig, SimulationMode, SimulationReport};
pub use special::incomplete_beta;
pub use spm::{BetaSpm, Component, Spm, SpmSpec, StepSpm};

//! Parameter sweeps over (lambda, pi0, power, selection model).

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use pubfdr_core::estimator::WindowCounts;
use pubfdr_core::{
    bias_beta_closed, bias_general, bias_threshold_closed, bias_two_step_closed, true_fdr, variance_approx,
    AnalysisPoint, MixtureModel, SelectedPvalues, Spm, TieRule,
};
use rayon::prelude::*;
use serde::Deserialize;

use crate::format::{Precision, Record};
use crate::ingest::ingest_pvalues;

/// Selection-model axis of a sweep.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpmFamily {
    TwoStep { rhos: Vec<f64> },
    Beta { etas: Vec<f64> },
    Threshold,
    Johnson,
    Moss,
    Custom { models: Vec<SpmEntry> },
}

/// A custom model: a preset name (`"moss"`, `"beta:35"`, ...) or an explicit table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SpmEntry {
    Preset(String),
    Explicit(Spm),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasMethod {
    /// Family closed form where one exists, the general moment formula otherwise.
    #[default]
    Closed,
    General,
}

/// Declarative sweep description, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub pi0s: Vec<f64>,
    pub powers: Vec<f64>,
    pub spm: SpmFamily,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub pvalues: Option<PathBuf>,
    #[serde(default)]
    pub pvalue_column: Option<String>,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub bias_method: BiasMethod,
    /// Fixed decimals for output; significant digits are used when absent.
    #[serde(default)]
    pub decimals: Option<usize>,
}

impl SweepGrid {
    /// Parse a TOML config. A relative `pvalues` path is resolved against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> anyhow::Result<Self> {
        let mut grid: SweepGrid = toml::from_str(text).context("invalid sweep config")?;
        if let (Some(p), Some(base)) = (grid.pvalues.as_mut(), base) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let a = self.alpha;
        ensure!(a > 0.0 && a < 1.0, "alpha must lie in (0, 1), got {a}");
        ensure!(!self.lambdas.is_empty(), "lambdas is empty");
        ensure!(!self.pi0s.is_empty(), "pi0s is empty");
        ensure!(!self.powers.is_empty(), "powers is empty");
        for &l in &self.lambdas {
            ensure!((0.0..a).contains(&l), "lambda {l} outside [0, alpha)");
        }
        for &p in &self.pi0s {
            ensure!(p > 0.0 && p < 1.0, "pi0 {p} outside (0, 1)");
        }
        for &w in &self.powers {
            ensure!(w > a && w <= 1.0, "power {w} outside (alpha, 1]");
        }
        match &self.spm {
            SpmFamily::TwoStep { rhos } => ensure!(!rhos.is_empty(), "rhos is empty"),
            SpmFamily::Beta { etas } => ensure!(!etas.is_empty(), "etas is empty"),
            SpmFamily::Custom { models } => ensure!(!models.is_empty(), "models is empty"),
            _ => {}
        }
        if let Some(n) = self.n {
            ensure!(n > 0, "n must be positive");
        }
        Ok(())
    }

    pub fn precision(&self) -> Precision {
        self.decimals.map_or_else(Precision::default, Precision::Decimals)
    }

    /// Models on the selection axis with their parameter value, in config order.
    fn models(&self) -> anyhow::Result<Vec<(Spm, Option<f64>)>> {
        let a = self.alpha;
        Ok(match &self.spm {
            SpmFamily::TwoStep { rhos } => {
                rhos.iter().map(|&r| Ok((Spm::two_step(a, r)?, Some(r)))).collect::<anyhow::Result<_>>()?
            }
            SpmFamily::Beta { etas } => {
                etas.iter().map(|&e| Ok((Spm::beta(e)?, Some(e)))).collect::<anyhow::Result<_>>()?
            }
            SpmFamily::Threshold => vec![(Spm::threshold(a)?, None)],
            SpmFamily::Johnson => vec![(Spm::johnson(), None)],
            SpmFamily::Moss => vec![(Spm::moss(), None)],
            SpmFamily::Custom { models } => models
                .iter()
                .map(|m| match m {
                    SpmEntry::Preset(s) => Ok((crate::parse_spm_preset(s, a)?, None)),
                    SpmEntry::Explicit(spm) => Ok((spm.clone(), None)),
                })
                .collect::<anyhow::Result<_>>()?,
        })
    }

    fn parameter_name(&self) -> Option<&'static str> {
        match self.spm {
            SpmFamily::TwoStep { .. } => Some("rho"),
            SpmFamily::Beta { .. } => Some("eta"),
            _ => None,
        }
    }
}

/// One grid point. Failed quantities are `None` and explained in `error`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub pi0: f64,
    pub power: f64,
    pub gamma: Option<f64>,
    pub spm: String,
    pub parameter: Option<f64>,
    pub fdr_hat: Option<f64>,
    pub true_fdr: Option<f64>,
    pub bias: Option<f64>,
    pub std_error: Option<f64>,
    pub corrected: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub alpha: f64,
    pub parameter_name: Option<&'static str>,
    pub has_data: bool,
    pub has_n: bool,
    pub precision: Precision,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn records(&self) -> Vec<Record> {
        self.rows
            .iter()
            .map(|row| {
                let mut r = Record::new();
                r.push("alpha", self.alpha)
                    .push("lambda", row.lambda)
                    .push("pi0", row.pi0)
                    .push("power", row.power)
                    .push("gamma", row.gamma)
                    .push("spm", row.spm.as_str());
                if let Some(name) = self.parameter_name {
                    r.push(name, row.parameter);
                }
                if self.has_data {
                    r.push("fdr_hat", row.fdr_hat);
                }
                r.push("true_fdr", row.true_fdr).push("bias", row.bias);
                if self.has_n {
                    r.push("std_error", row.std_error);
                }
                if self.has_data {
                    r.push("corrected", row.corrected);
                }
                r.push("error", row.error.clone());
                r
            })
            .collect()
    }

    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut buf = Vec::new();
        crate::format::write_csv(&mut buf, &self.records(), self.precision)?;
        Ok(buf)
    }

    pub fn to_json(&self) -> anyhow::Result<Vec<u8>> {
        let value = crate::format::json_array(&self.records(), self.precision);
        let mut buf = serde_json::to_vec_pretty(&value)?;
        buf.push(b'\n');
        Ok(buf)
    }
}

struct CellSpec<'a> {
    lambda: f64,
    lambda_index: usize,
    pi0: f64,
    power: f64,
    spm: &'a Spm,
    parameter: Option<f64>,
}

/// Evaluate the grid. Cells run in parallel; rows come back in nested axis
/// order lambda, pi0, power, selection model, each axis in config order.
pub fn run_sweep(grid: &SweepGrid) -> anyhow::Result<SweepResult> {
    grid.validate()?;
    let models = grid.models()?;
    let data = match &grid.pvalues {
        Some(path) => Some(ingest_pvalues(path, grid.pvalue_column.as_deref())?.pvalues),
        None => None,
    };
    let n = grid.n.or(data.as_ref().map(|d| d.len() as u64));
    let estimates: Vec<Result<f64, String>> = match &data {
        Some(d) => grid.lambdas.iter().map(|&l| fdr_hat(d, grid.alpha, l, grid.tie_rule)).collect(),
        None => Vec::new(),
    };

    let mut cells = Vec::new();
    for (lambda_index, &lambda) in grid.lambdas.iter().enumerate() {
        for &pi0 in &grid.pi0s {
            for &power in &grid.powers {
                for (spm, parameter) in &models {
                    cells.push(CellSpec { lambda, lambda_index, pi0, power, spm, parameter: *parameter });
                }
            }
        }
    }

    let rows = cells.par_iter().map(|c| evaluate(grid, c, n, estimates.get(c.lambda_index).cloned())).collect();

    Ok(SweepResult {
        alpha: grid.alpha,
        parameter_name: grid.parameter_name(),
        has_data: data.is_some(),
        has_n: n.is_some(),
        precision: grid.precision(),
        rows,
    })
}

fn fdr_hat(data: &SelectedPvalues, alpha: f64, lambda: f64, tie_rule: TieRule) -> Result<f64, String> {
    WindowCounts::tally(data.values(), alpha, lambda, tie_rule)
        .fdr_hat(alpha, lambda)
        .ok_or_else(|| format!("no p-values at or below alpha = {alpha}"))
}

fn evaluate(grid: &SweepGrid, c: &CellSpec, n: Option<u64>, estimate: Option<Result<f64, String>>) -> SweepRow {
    let mut errors = Vec::new();
    let mut row = SweepRow {
        lambda: c.lambda,
        pi0: c.pi0,
        power: c.power,
        gamma: None,
        spm: c.spm.to_string(),
        parameter: c.parameter,
        fdr_hat: None,
        true_fdr: None,
        bias: None,
        std_error: None,
        corrected: None,
        error: None,
    };
    match estimate {
        Some(Ok(v)) => row.fdr_hat = Some(v),
        Some(Err(e)) => errors.push(format!("fdr_hat: {e}")),
        None => {}
    }
    let model = match MixtureModel::from_power(c.pi0, c.power, grid.alpha) {
        Ok(m) => m,
        Err(e) => {
            errors.push(format!("model: {e}"));
            row.error = Some(errors.join("; "));
            return row;
        }
    };
    row.gamma = Some(model.gamma());
    let point = match AnalysisPoint::new(grid.alpha, c.lambda, model, c.spm.clone()) {
        Ok(p) => p,
        Err(e) => {
            errors.push(e.to_string());
            row.error = Some(errors.join("; "));
            return row;
        }
    };
    match true_fdr(&point) {
        Ok(v) => row.true_fdr = Some(v),
        Err(e) => errors.push(format!("true_fdr: {e}")),
    }
    match cell_bias(grid, c, &point) {
        Ok(v) => row.bias = Some(v),
        Err(e) => errors.push(format!("bias: {e}")),
    }
    if let Some(n) = n {
        match variance_approx(&point.clone().with_n(n)) {
            Ok(v) => row.std_error = Some(v.std_error),
            Err(e) => errors.push(format!("std_error: {e}")),
        }
    }
    if let (Some(f), Some(b)) = (row.fdr_hat, row.bias) {
        row.corrected = Some(f - b);
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

fn cell_bias(grid: &SweepGrid, c: &CellSpec, point: &AnalysisPoint) -> pubfdr_core::Result<f64> {
    let (a, l, m) = (grid.alpha, c.lambda, &point.model);
    match (grid.bias_method, &grid.spm, c.parameter) {
        (BiasMethod::Closed, SpmFamily::TwoStep { .. }, Some(rho)) => bias_two_step_closed(a, l, m, rho),
        (BiasMethod::Closed, SpmFamily::Beta { .. }, Some(eta)) => bias_beta_closed(a, l, m, eta),
        (BiasMethod::Closed, SpmFamily::Threshold, _) => bias_threshold_closed(a, l, m),
        _ => bias_general(point),
    }
}

/// Resolve a sweep config path and run it.
pub fn run_sweep_file(path: &Path) -> anyhow::Result<SweepResult> {
    run_sweep(&SweepGrid::load(path)?)
}

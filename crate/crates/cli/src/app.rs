//! Argument parsing and command dispatch for the `pubfdr` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pubfdr_core::analysis::{bias_beta_closed, bias_threshold_closed, bias_two_step_closed};
use pubfdr_core::simulate::{run as simulate, sample_post_selection};
use pubfdr_core::{
    bias_general, estimate, estimate_with_sensitivity, true_fdr, variance_approx, AnalysisPoint, EstimateOptions,
    LambdaSpec, MixtureModel, QuantileBasis, SimulationConfig, SimulationMode, Spm, TieRule, VarianceReport,
};
use serde_json::json;

use crate::format::{write_csv, Precision, Record};
use crate::ingest::ingest_pvalues;
use crate::sweep::SweepGrid;

#[derive(Debug, Parser)]
#[command(name = "pubfdr", version, about = "FDR estimation and bias analysis for selected p-values")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; plain text by default (CSV for sweep, JSON for simulate).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Significant digits for numeric output.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    digits: u8,
    /// Fixed decimals instead of significant digits (ties round to even).
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=17))]
    decimals: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the FDR from a CSV of selected p-values.
    Estimate(EstimateArgs),
    /// Post-selection FDR implied by a model.
    TrueFdr(TrueFdrArgs),
    /// Bias of the estimator under a model.
    Bias(BiasArgs),
    /// Large-sample variance of the estimator.
    Variance(VarianceArgs),
    /// Evaluate a parameter grid from a TOML config.
    Sweep(SweepArgs),
    /// Monte Carlo replicates of the estimator.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Strength {
    /// Power at level alpha; sets gamma = ln(power) / ln(alpha).
    #[arg(long)]
    power: Option<f64>,
    /// Beta-alternative exponent directly.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    pi0: f64,
    #[command(flatten)]
    strength: Strength,
    /// Selection model: preset (threshold, johnson, moss, two-step:RHO, beta:ETA, ...) or a TOML/JSON file.
    #[arg(long, default_value = "threshold")]
    spm: String,
}

#[derive(Debug, Args)]
struct OptionalModelArgs {
    #[arg(long)]
    pi0: Option<f64>,
    #[arg(long, conflicts_with = "gamma")]
    power: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    spm: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Basis {
    Discoveries,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ties {
    Open,
    Closed,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    pvalues: PathBuf,
    /// Column holding the p-values when the CSV has a header.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, required_unless_present = "lambda_quantile", conflicts_with = "lambda_quantile")]
    lambda: Option<f64>,
    /// Use this quantile of the p-values as lambda.
    #[arg(long)]
    lambda_quantile: Option<f64>,
    #[arg(long, value_enum, default_value = "discoveries", requires = "lambda_quantile")]
    quantile_basis: Basis,
    #[arg(long, value_enum, default_value = "open")]
    tie_rule: Ties,
    /// Clamp reported estimates to [0, 1].
    #[arg(long)]
    clamp: bool,
    #[command(flatten)]
    model: OptionalModelArgs,
}

#[derive(Debug, Args)]
struct TrueFdrArgs {
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    General,
    Closed,
}

#[derive(Debug, Args)]
struct BiasArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "general")]
    method: Method,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    n: u64,
    /// Probability of a selected p-value in [0, lambda]; replaces the model.
    #[arg(long, requires = "q2", conflicts_with_all = ["pi0", "power", "gamma", "spm"])]
    q1: Option<f64>,
    /// Probability of a selected p-value in (lambda, alpha].
    #[arg(long, requires = "q1")]
    q2: Option<f64>,
    #[command(flatten)]
    model: OptionalModelArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Population,
    Direct,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    model: ModelArgs,
    /// Population size, or the selected count per replicate in direct mode.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "population")]
    mode: Mode,
    /// Also write one direct-mode sample (p, is_null) of size m to this CSV.
    #[arg(long)]
    emit_pvalues: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Data(e) => format!("{e:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Run the CLI with `args` (including the program name) and return the exit code:
/// 0 on success, 1 on a usage error, 2 on a data error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json_errors = wants_json(&args);
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            if json_errors {
                let f = usage(e.kind().to_string());
                emit_error(stdout, &f);
            }
            return 1;
        }
    };
    match execute(&cli) {
        Ok(bytes) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &bytes).with_context(|| format!("cannot write {}", path.display())),
                None => stdout.write_all(&bytes).context("cannot write to stdout"),
            };
            match written {
                Ok(()) => 0,
                Err(e) => report(Failure::Data(e), json_errors, stdout, stderr),
            }
        }
        Err(f) => report(f, json_errors, stdout, stderr),
    }
}

fn report(f: Failure, json: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "error: {}", f.message());
    if json {
        emit_error(stdout, &f);
    }
    f.code()
}

fn emit_error(stdout: &mut dyn Write, f: &Failure) {
    let body = json!({ "error": { "kind": f.kind(), "exit_code": f.code(), "message": f.message() } });
    let _ = writeln!(stdout, "{body}");
}

fn wants_json(args: &[OsString]) -> bool {
    args.iter().zip(args.iter().skip(1)).any(|(a, b)| a == "--format" && b == "json")
        || args.iter().any(|a| a == "--format=json")
}

impl Cli {
    fn precision(&self) -> Precision {
        match self.decimals {
            Some(d) => Precision::Decimals(d as usize),
            None => Precision::Significant(self.digits as usize),
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<u8>, Failure> {
    let p = cli.precision();
    let f = cli.format;
    match &cli.command {
        Command::Estimate(a) => render_one(&cmd_estimate(a)?, f.unwrap_or(Format::Plain), p, false),
        Command::TrueFdr(a) => render_one(&cmd_true_fdr(a)?, f.unwrap_or(Format::Plain), p, true),
        Command::Bias(a) => render_one(&cmd_bias(a)?, f.unwrap_or(Format::Plain), p, true),
        Command::Variance(a) => render_one(&cmd_variance(a)?, f.unwrap_or(Format::Plain), p, false),
        Command::Simulate(a) => render_one(&cmd_simulate(a)?, f.unwrap_or(Format::Json), p, false),
        Command::Sweep(a) => cmd_sweep(a, cli),
    }
}

/// Plain output is the leading value alone for scalar commands, otherwise one
/// `key: value` line per field.
fn render_one(r: &Record, format: Format, p: Precision, scalar: bool) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &r.to_json(p))?;
            buf.push(b'\n');
        }
        Format::Csv => write_csv(&mut buf, std::slice::from_ref(r), p)?,
        Format::Plain if scalar => {
            let first = r.cells().next().map(|c| c.render(p)).unwrap_or_default();
            writeln!(buf, "{first}")?;
        }
        Format::Plain => {
            for (k, c) in r.keys().zip(r.cells()) {
                writeln!(buf, "{k}: {}", c.render(p))?;
            }
        }
    }
    Ok(buf)
}

fn resolve_spm(spec: &str, alpha: f64) -> Result<Spm, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(crate::load_spm_file(path)?);
    }
    crate::parse_spm_preset(spec, alpha).map_err(|e| usage(format!("--spm: {e}")))
}

fn build_model(pi0: f64, power: Option<f64>, gamma: Option<f64>, alpha: f64) -> Result<MixtureModel, Failure> {
    Ok(match (power, gamma) {
        (Some(w), None) => MixtureModel::from_power(pi0, w, alpha)?,
        (None, Some(g)) => MixtureModel::new(pi0, g)?,
        _ => return Err(usage("exactly one of --power or --gamma is required")),
    })
}

impl ModelArgs {
    fn resolve(&self, alpha: f64) -> Result<(MixtureModel, Spm), Failure> {
        let model = build_model(self.pi0, self.strength.power, self.strength.gamma, alpha)?;
        Ok((model, resolve_spm(&self.spm, alpha)?))
    }
}

impl OptionalModelArgs {
    fn is_empty(&self) -> bool {
        self.pi0.is_none() && self.power.is_none() && self.gamma.is_none() && self.spm.is_none()
    }

    fn resolve(&self, alpha: f64) -> Result<Option<(MixtureModel, Spm)>, Failure> {
        if self.is_empty() {
            return Ok(None);
        }
        let pi0 = self.pi0.ok_or_else(|| usage("--pi0 is required when a model is given"))?;
        let model = build_model(pi0, self.power, self.gamma, alpha)?;
        let spm = resolve_spm(self.spm.as_deref().unwrap_or("threshold"), alpha)?;
        Ok(Some((model, spm)))
    }
}

fn model_fields(r: &mut Record, alpha: f64, model: &MixtureModel, spm: &Spm) {
    r.push("alpha", alpha)
        .push("pi0", model.pi0())
        .push("power", model.power(alpha))
        .push("gamma", model.gamma())
        .push("spm", spm.to_string());
}

fn cmd_estimate(a: &EstimateArgs) -> Result<Record, Failure> {
    let data = ingest_pvalues(&a.pvalues, a.column.as_deref())?;
    let lambda = match (a.lambda, a.lambda_quantile) {
        (Some(l), None) => LambdaSpec::Fixed(l),
        (None, Some(q)) => LambdaSpec::Quantile {
            q,
            basis: match a.quantile_basis {
                Basis::Discoveries => QuantileBasis::Discoveries,
                Basis::All => QuantileBasis::All,
            },
        },
        _ => return Err(usage("give exactly one of --lambda or --lambda-quantile")),
    };
    let opts = EstimateOptions {
        tie_rule: match a.tie_rule {
            Ties::Open => TieRule::Open,
            Ties::Closed => TieRule::Closed,
        },
        clamp: a.clamp,
        ..EstimateOptions::new(a.alpha, lambda)
    };
    let report = match a.model.resolve(a.alpha)? {
        Some((model, spm)) => estimate_with_sensitivity(&data.pvalues, &opts, &model, &spm)?,
        None => estimate(&data.pvalues, &opts)?,
    };
    let mut r = Record::new();
    r.push("fdr_hat", report.fdr_hat)
        .push("alpha", report.alpha)
        .push("lambda", report.lambda_used)
        .push("n", report.n)
        .push("n_prime", report.n_prime)
        .push("upper_count", report.upper_count);
    if report.bias.is_some() {
        r.push("bias", report.bias).push("std_error", report.std_error).push("corrected", report.fdr_hat_corrected);
    }
    Ok(r)
}

fn cmd_true_fdr(a: &TrueFdrArgs) -> Result<Record, Failure> {
    let (model, spm) = a.model.resolve(a.alpha)?;
    // lambda does not enter the true FDR; any admissible value will do.
    let point = AnalysisPoint::new(a.alpha, 0.0, model, spm.clone())?;
    let mut r = Record::new();
    r.push("true_fdr", true_fdr(&point)?);
    model_fields(&mut r, a.alpha, &model, &spm);
    Ok(r)
}

/// Closed-form bias for the SPM shapes that have one.
fn closed_bias(alpha: f64, lambda: f64, model: &MixtureModel, spm: &Spm) -> Option<pubfdr_core::Result<f64>> {
    match spm {
        Spm::Beta(b) => Some(bias_beta_closed(alpha, lambda, model, b.eta())),
        Spm::Step(s) => match (s.cuts(), s.levels()) {
            ([c], [1.0, 0.0]) if *c == alpha => Some(bias_threshold_closed(alpha, lambda, model)),
            ([c1, c2], [1.0, rho, 0.0]) if *c1 == alpha / 2.0 && *c2 == alpha => {
                Some(bias_two_step_closed(alpha, lambda, model, *rho))
            }
            _ => None,
        },
    }
}

fn cmd_bias(a: &BiasArgs) -> Result<Record, Failure> {
    let (model, spm) = a.model.resolve(a.alpha)?;
    let point = AnalysisPoint::new(a.alpha, a.lambda, model, spm.clone())?;
    let bias = match a.method {
        Method::General => bias_general(&point)?,
        Method::Closed => closed_bias(a.alpha, a.lambda, &model, &spm)
            .ok_or_else(|| usage(format!("no closed form for selection model {spm}; use --method general")))??,
    };
    let mut r = Record::new();
    r.push("bias", bias);
    model_fields(&mut r, a.alpha, &model, &spm);
    r.push("lambda", a.lambda);
    Ok(r)
}

fn cmd_variance(a: &VarianceArgs) -> Result<Record, Failure> {
    let v: VarianceReport = match (a.q1, a.q2) {
        (Some(q1), Some(q2)) => VarianceReport::from_probabilities(a.alpha, a.lambda, q1, q2, a.n)?,
        _ => {
            let (model, spm) = a
                .model
                .resolve(a.alpha)?
                .ok_or_else(|| usage("give --q1 and --q2, or a model via --pi0 and --power"))?;
            variance_approx(&AnalysisPoint::new(a.alpha, a.lambda, model, spm)?.with_n(a.n))?
        }
    };
    let mut r = Record::new();
    r.push("variance", v.variance)
        .push("std_error", v.std_error)
        .push("q1", v.q1)
        .push("q2", v.q2)
        .push("q3", v.q3)
        .push("alpha", a.alpha)
        .push("lambda", a.lambda)
        .push("n", a.n);
    Ok(r)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Record, Failure> {
    let (model, spm) = a.model.resolve(a.alpha)?;
    let config = SimulationConfig {
        m: a.m,
        reps: a.reps,
        seed: a.seed,
        model,
        spm: spm.clone(),
        alpha: a.alpha,
        lambda: a.lambda,
        mode: match a.mode {
            Mode::Population => SimulationMode::Population,
            Mode::Direct => SimulationMode::PostSelectionDirect,
        },
    };
    let report = simulate(&config)?;
    if let Some(path) = &a.emit_pvalues {
        let sample = sample_post_selection(&model, &spm, a.m, a.seed)?;
        let rows: Vec<Record> = sample
            .pvalues
            .iter()
            .zip(&sample.is_null)
            .map(|(&pv, &null)| {
                let mut r = Record::new();
                r.push("p", pv).push("is_null", if null { "1" } else { "0" });
                r
            })
            .collect();
        let file = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        write_csv(std::io::BufWriter::new(file), &rows, Precision::Significant(17))?;
    }
    let mut r = Record::new();
    r.push("empirical_fdr", report.empirical_fdr)
        .push("mc_std_error_of_fdr", report.mc_std_error_of_fdr)
        .push("empirical_mean_fdr_hat", report.empirical_mean_fdr_hat)
        .push("empirical_var_fdr_hat", report.empirical_var_fdr_hat)
        .push("mc_std_error_of_mean", report.mc_std_error_of_mean)
        .push("reps", report.reps)
        .push("replicates_with_zero_discoveries", report.replicates_with_zero_discoveries)
        .push("mean_n", report.mean_n)
        .push("mean_n_prime", report.mean_n_prime)
        .push("seed", a.seed)
        .push("m", a.m)
        .push(
            "mode",
            match a.mode {
                Mode::Population => "population",
                Mode::Direct => "post-selection-direct",
            },
        )
        .push("lambda", a.lambda);
    model_fields(&mut r, a.alpha, &model, &spm);
    Ok(r)
}

fn cmd_sweep(a: &SweepArgs, cli: &Cli) -> Result<Vec<u8>, Failure> {
    let grid = SweepGrid::load(&a.config)?;
    let mut result = crate::sweep::run_sweep(&grid)?;
    if grid.decimals.is_none() {
        result.precision = cli.precision();
    }
    Ok(match cli.format.unwrap_or(Format::Csv) {
        Format::Json => result.to_json()?,
        Format::Csv | Format::Plain => result.to_csv()?,
    })
}

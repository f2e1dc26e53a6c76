//! Command-line front end: p-value ingestion, sweep configs and output formatting.

pub mod app;
pub mod format;
pub mod ingest;
pub mod sweep;

pub use app::run;
pub use format::{Precision, Record};
pub use ingest::{ingest_pvalues, IngestError, Ingested};
pub use sweep::{run_sweep, run_sweep_file, BiasMethod, SpmEntry, SpmFamily, SweepGrid, SweepResult, SweepRow};

use pubfdr_core::Spm;

/// Parse a selection-model preset, filling in `alpha` where the preset needs it.
///
/// Besides the core grammar this accepts bare `threshold` and `two-step:rho`.
pub fn parse_spm_preset(s: &str, alpha: f64) -> pubfdr_core::Result<Spm> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if lower == "threshold" {
        return Spm::threshold(alpha);
    }
    for prefix in ["two-step:", "two_step:"] {
        if let Some(rho) = lower.strip_prefix(prefix) {
            let rho = rho.trim().parse().map_err(|_| pubfdr_core::Error::InvalidSpm(format!("bad rho in `{t}`")))?;
            return Spm::two_step(alpha, rho);
        }
    }
    t.parse()
}

/// Read a selection model from a TOML or JSON file holding one `SpmSpec` table.
pub fn load_spm_file(path: &std::path::Path) -> anyhow::Result<Spm> {
    use anyhow::Context;
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let spm = if is_json {
        serde_json::from_str(&text).with_context(|| format!("{}: invalid selection model", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("{}: invalid selection model", path.display()))?
    };
    Ok(spm)
}

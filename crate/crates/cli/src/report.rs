//! Result records and serialization. The JSON schema is pinned by golden
//! tests; all user-facing feature indices are 1-based.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::errors::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SelectedFeature {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KappaSummary {
    pub kappa: f64,
    /// None when no threshold was feasible (infinite cutoff).
    pub tau: Option<f64>,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FeatureRow {
    pub index: usize,
    pub name: String,
    /// Coefficient of the initial fit on the standardized scale.
    pub beta_hat: f64,
    /// Same coefficient mapped back to the raw covariate scale.
    pub beta_raw: f64,
    pub w1: f64,
    pub w2: f64,
    /// Weight at the winning kappa.
    pub gamma: f64,
    /// Statistic at the winning kappa.
    pub m_hat: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub software_version: String,
    pub command: String,
    pub family: String,
    pub n: usize,
    pub p: usize,
    pub q: f64,
    pub kappa_grid: Vec<f64>,
    pub seed: u64,
    pub lambda_rule: String,
    pub lambda: f64,
    pub kappa_max: f64,
    pub tau: Option<f64>,
    pub selected: Vec<SelectedFeature>,
    pub per_kappa: Vec<KappaSummary>,
    pub features: Vec<FeatureRow>,
    pub timestamp: String,
    pub elapsed_seconds: f64,
}

pub const SCHEMA_VERSION: u32 = 1;

/// Write bytes to a temporary file in the target directory, then rename
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| CliError::io(path, e))?;
    std::io::Write::write_all(&mut tmp.as_file(), bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_result_json(path: &Path, record: &ResultRecord) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(record)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_result_json(path: &Path) -> Result<ResultRecord, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("result file {}: {e}", path.display())))
}

/// Flat per-feature table, one data row per feature.
pub fn write_feature_csv(path: &Path, record: &ResultRecord) -> Result<(), CliError> {
    let mut out = String::from("index,name,beta_hat,beta_raw,w1,w2,gamma,m_hat,selected\n");
    let selected: std::collections::BTreeSet<usize> =
        record.selected.iter().map(|s| s.index).collect();
    for f in &record.features {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            f.index,
            f.name,
            f.beta_hat,
            f.beta_raw,
            f.w1,
            f.w2,
            f.gamma,
            f.m_hat,
            u8::from(selected.contains(&f.index))
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Default output path for `report`: the input with a new extension.
pub fn with_extension(input: &Path, ext: &str) -> PathBuf {
    let mut out = input.to_path_buf();
    out.set_extension(ext);
    out
}

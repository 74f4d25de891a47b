//! Run configuration: defaults, optional config file, and flag overrides.
//! Precedence is flag > config file > built-in default.

use std::path::Path;

use bgm_core::{GlmFamily, LambdaMode, LambdaRule};
use serde::Deserialize;

use crate::errors::CliError;

pub const DEFAULT_Q: f64 = 0.1;
pub const DEFAULT_CV_FOLDS: usize = 10;
pub const DEFAULT_CV_GRID_SIZE: usize = 50;
pub const DEFAULT_CV_GRID_RATIO: f64 = 0.01;

/// Optional JSON config file supplying defaults for the select command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<String>,
    pub q: Option<f64>,
    pub kappa: Option<String>,
    pub lambda: Option<String>,
    pub seed: Option<u64>,
    pub delimiter: Option<char>,
    pub has_header: Option<bool>,
    pub response: Option<String>,
    pub response_col: Option<String>,
    pub cv_folds: Option<usize>,
    pub cv_grid_size: Option<usize>,
    pub cv_grid_ratio: Option<f64>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
}

pub fn parse_family(s: &str) -> Result<GlmFamily, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "linear" => Ok(GlmFamily::Linear),
        "logistic" => Ok(GlmFamily::Logistic),
        other => Err(CliError::Config(format!(
            "unknown family {other:?}; expected linear or logistic"
        ))),
    }
}

pub fn family_label(f: GlmFamily) -> &'static str {
    match f {
        GlmFamily::Linear => "linear",
        GlmFamily::Logistic => "logistic",
    }
}

/// Parse a kappa grid given as "LO:HI" (inclusive integer range) or a
/// comma-separated list of values.
pub fn parse_kappa_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Config(format!("kappa grid {s:?}: {msg}"));
    let grid: Vec<f64> = if let Some((lo, hi)) = s.split_once(':') {
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| bad("range endpoints must be integers".into()))?;
        let hi: i64 = hi
            .trim()
            .parse()
            .map_err(|_| bad("range endpoints must be integers".into()))?;
        if lo > hi {
            return Err(bad(format!("empty range {lo}:{hi}")));
        }
        (lo..=hi).map(|k| k as f64).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected numbers".into()))?
    };
    if grid.is_empty() {
        return Err(bad("empty grid".into()));
    }
    for w in grid.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(bad("must be sorted ascending".into()));
        }
    }
    if grid.iter().any(|&k| !k.is_finite() || k < 1.0) {
        return Err(bad("all values must be >= 1".into()));
    }
    Ok(grid)
}

/// Parse "cv" or a fixed nonnegative number into a lambda rule.
pub fn parse_lambda_rule(
    s: &str,
    folds: usize,
    grid_size: usize,
    grid_ratio: f64,
    seed: u64,
) -> Result<LambdaRule, CliError> {
    let rule = if s.eq_ignore_ascii_case("cv") {
        LambdaRule {
            mode: LambdaMode::CrossValidated {
                folds,
                grid_size,
                grid_ratio,
            },
            seed,
        }
    } else {
        let v: f64 = s.parse().map_err(|_| {
            CliError::Config(format!("lambda must be \"cv\" or a number, got {s:?}"))
        })?;
        LambdaRule::fixed(v)
    };
    rule.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(rule)
}

pub fn lambda_rule_label(rule: &LambdaRule) -> String {
    match rule.mode {
        LambdaMode::Fixed(v) => format!("fixed({v})"),
        LambdaMode::CrossValidated {
            folds,
            grid_size,
            grid_ratio,
        } => format!("cv(folds={folds},grid={grid_size},ratio={grid_ratio})"),
    }
}

pub fn validate_q(q: f64) -> Result<f64, CliError> {
    if q > 0.0 && q < 1.0 {
        Ok(q)
    } else {
        Err(CliError::Config(format!("q must lie in (0,1), got {q}")))
    }
}

/// Parse a comma-separated list of floats (for --delta / --rho).
pub fn parse_float_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("{what} list {s:?} must be numbers")))?;
    if vals.is_empty() {
        return Err(CliError::Config(format!("{what} list is empty")));
    }
    Ok(vals)
}

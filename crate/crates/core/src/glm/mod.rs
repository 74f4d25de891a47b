//! Sparse GLM estimation: column standardization, L1-penalized linear and
//! logistic regression by coordinate descent, and penalty selection.

mod design;
mod lambda;
mod linear;
mod logistic;

pub use design::{standardize_columns, StandardizedDesign};
pub use lambda::select_lambda;
pub use linear::lasso_linear;
pub use logistic::lasso_logistic;

use ndarray::{Array1, ArrayView1, ArrayView2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlmError {
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("penalty must be a nonnegative finite number, got {0}")]
    InvalidLambda(f64),
    #[error("invalid lambda rule: {0}")]
    InvalidLambdaRule(String),
    #[error("logistic response must be 0/1 with both classes present")]
    InvalidResponse,
}

/// Model family: identity-link Gaussian or logit-link Bernoulli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GlmFamily {
    Linear,
    Logistic,
}

impl GlmFamily {
    /// Inverse link: mean response at linear predictor `eta`.
    pub fn mean(&self, eta: f64) -> f64 {
        match self {
            GlmFamily::Linear => eta,
            GlmFamily::Logistic => sigmoid(eta),
        }
    }

    /// Per-observation negative log-likelihood contribution.
    pub fn nll_term(&self, eta: f64, y: f64) -> f64 {
        match self {
            GlmFamily::Linear => 0.5 * (y - eta) * (y - eta),
            GlmFamily::Logistic => log1p_exp(eta) - y * eta,
        }
    }
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(eta)) without overflow.
pub(crate) fn log1p_exp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

/// One L1-penalized GLM fit. Coefficients are on the scale of the matrix
/// the fit was run on; the intercept is unpenalized.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coefficients: Array1<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Logistic only: fitted probabilities saturated for every observation.
    pub separated: bool,
    pub objective: f64,
}

/// How the penalty level is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMode {
    Fixed(f64),
    CrossValidated {
        folds: usize,
        grid_size: usize,
        grid_ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRule {
    pub mode: LambdaMode,
    /// Seed for fold assignment; unused in fixed mode.
    pub seed: u64,
}

impl LambdaRule {
    pub fn fixed(value: f64) -> Self {
        LambdaRule {
            mode: LambdaMode::Fixed(value),
            seed: 0,
        }
    }

    /// 10-fold CV over a 50-point log grid down to 0.01 * lambda_max.
    pub fn cross_validated(seed: u64) -> Self {
        LambdaRule {
            mode: LambdaMode::CrossValidated {
                folds: 10,
                grid_size: 50,
                grid_ratio: 0.01,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GlmError> {
        match self.mode {
            LambdaMode::Fixed(v) => {
                if !v.is_finite() || v < 0.0 {
                    return Err(GlmError::InvalidLambda(v));
                }
            }
            LambdaMode::CrossValidated {
                folds,
                grid_size,
                grid_ratio,
            } => {
                if folds < 2 {
                    return Err(GlmError::InvalidLambdaRule(format!(
                        "folds must be >= 2, got {folds}"
                    )));
                }
                if grid_size < 10 {
                    return Err(GlmError::InvalidLambdaRule(format!(
                        "grid_size must be >= 10, got {grid_size}"
                    )));
                }
                if !(grid_ratio > 0.0 && grid_ratio < 1.0) {
                    return Err(GlmError::InvalidLambdaRule(format!(
                        "grid_ratio must be in (0,1), got {grid_ratio}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// sign(z) * max(|z| - lambda, 0).
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Maximum violation of the subgradient stationarity conditions of `fit`
/// on the matrix it was fit against. For a zero coefficient the gradient
/// must lie inside [-lambda, lambda]; for an active one it must sit at
/// lambda * sign(b_j). The linear family uses the residual y - b0 - Xb,
/// the logistic family y minus the fitted probabilities.
pub fn kkt_max_violation(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    family: GlmFamily,
    fit: &LassoFit,
) -> f64 {
    let n = x.nrows();
    let nf = n as f64;
    let mut r = Array1::<f64>::zeros(n);
    for i in 0..n {
        let eta = fit.intercept + x.row(i).dot(&fit.coefficients);
        r[i] = y[i] - family.mean(eta);
    }
    let mut worst: f64 = 0.0;
    // Intercept stationarity: mean residual must vanish.
    worst = worst.max((r.sum() / nf).abs());
    for j in 0..x.ncols() {
        let g = x.column(j).dot(&r) / nf;
        let b = fit.coefficients[j];
        let v = if b == 0.0 {
            (g.abs() - fit.lambda).max(0.0)
        } else {
            (g - fit.lambda * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(1.75, 0.0), 1.75);
        assert_eq!(soft_threshold(-2.5, 0.0), -2.5);
    }

    proptest! {
        #[test]
        fn soft_threshold_matches_definition(z in -1e6f64..1e6, lambda in 0.0f64..1e6) {
            let got = soft_threshold(z, lambda);
            let want = z.signum() * (z.abs() - lambda).max(0.0);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
            // shrinkage never flips sign or grows magnitude
            prop_assert!(got.abs() <= z.abs());
            prop_assert!(got == 0.0 || got.signum() == z.signum());
        }

        #[test]
        fn soft_threshold_identity_at_zero(z in -1e9f64..1e9) {
            prop_assert_eq!(soft_threshold(z, 0.0), z);
        }
    }

    #[test]
    fn sigmoid_is_stable_and_bounded() {
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(800.0) > 0.999);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!((log1p_exp(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log1p_exp(50.0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_rule_validation() {
        assert!(LambdaRule::fixed(0.05).validate().is_ok());
        assert!(LambdaRule::fixed(-1.0).validate().is_err());
        assert!(LambdaRule::cross_validated(3).validate().is_ok());
        let bad = LambdaRule {
            mode: LambdaMode::CrossValidated {
                folds: 1,
                grid_size: 50,
                grid_ratio: 0.01,
            },
            seed: 0,
        };
        assert!(bad.validate().is_err());
        let bad = LambdaRule {
            mode: LambdaMode::CrossValidated {
                folds: 5,
                grid_size: 50,
                grid_ratio: 1.5,
            },
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}

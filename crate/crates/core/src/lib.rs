//! Bi-Gaussian mirror statistics for FDR-controlled variable selection in
//! sparse linear and logistic regression, plus a seeded simulation harness.

pub mod glm;
pub mod mirrors;
pub mod rng;
pub mod selector;
pub mod sim;

pub use glm::{GlmError, GlmFamily, LambdaMode, LambdaRule, LassoFit, StandardizedDesign};
pub use mirrors::{FeatureMirrorScores, MirrorError, ScoreForm};
pub use selector::{BgmSelection, SelectorError};

/// Error type spanning the whole selection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum BgmError {
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
}

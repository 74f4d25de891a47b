//! Gaussian mirror construction and per-feature mirror scores.
//!
//! For feature j the column X_j is replaced by the pair (X_j + zeta,
//! X_j - zeta) with fresh standard-normal noise, the augmented model is
//! refit, and the leading two coefficients are folded into a nonnegative
//! score. Two independent noise draws per feature give the score pair
//! (W_j^(1), W_j^(2)) that the selector contrasts.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::glm::{lasso_linear, lasso_logistic, GlmError, GlmFamily, LassoFit, StandardizedDesign};
use crate::rng::{derive_seed, seeded_rng};

const TAG_MIRROR_NOISE: u64 = 0x6d69_7272;

#[derive(Debug, Error)]
pub enum MirrorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mirror fit failed for feature {feature} copy {copy}: {source}")]
    FitFailed {
        feature: usize,
        copy: u8,
        #[source]
        source: GlmError,
    },
}

/// Which of the two independent mirror draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorCopy {
    First,
    Second,
}

impl MirrorCopy {
    fn stream(self) -> u64 {
        match self {
            MirrorCopy::First => 1,
            MirrorCopy::Second => 2,
        }
    }
}

/// The two noise vectors for one feature. Both are regenerable from
/// `stream_seed` alone; copy 1 and copy 2 come from separate ChaCha
/// streams under that seed.
#[derive(Debug, Clone)]
pub struct MirrorNoise {
    pub feature_index: usize,
    pub zeta1: Array1<f64>,
    pub zeta2: Array1<f64>,
    pub stream_seed: u64,
}

fn normal_vector(stream_seed: u64, copy: MirrorCopy, n: usize) -> Array1<f64> {
    let mut rng = seeded_rng(stream_seed);
    rng.set_stream(copy.stream());
    Array1::from_shape_fn(n, |_| rng.sample(StandardNormal))
}

/// Draw the two independent standard-normal mirror noise vectors for one
/// feature. The substream is keyed by (master_seed, feature), so draws are
/// identical regardless of the order features are processed in.
pub fn draw_mirror_noise(feature_index: usize, n: usize, master_seed: u64) -> MirrorNoise {
    debug_assert!(n >= 1);
    let stream_seed = derive_seed(master_seed, &[TAG_MIRROR_NOISE, feature_index as u64]);
    MirrorNoise {
        feature_index,
        zeta1: normal_vector(stream_seed, MirrorCopy::First, n),
        zeta2: normal_vector(stream_seed, MirrorCopy::Second, n),
        stream_seed,
    }
}

/// Augmented design for one (feature, copy): columns are
/// (X_j + zeta, X_j - zeta, X_{-j}), giving n x (p+1). The mirror columns
/// are deliberately not re-standardized; rescaling them separately would
/// break the +/- symmetry of the construction.
#[derive(Debug, Clone)]
pub struct MirrorDesign {
    pub matrix: Array2<f64>,
    pub feature_index: usize,
    pub copy: MirrorCopy,
}

pub fn build_mirror_design(
    design: &StandardizedDesign,
    noise: &MirrorNoise,
    copy: MirrorCopy,
) -> Result<MirrorDesign, MirrorError> {
    let n = design.n();
    let p = design.p();
    let j = noise.feature_index;
    if noise.zeta1.len() != n || noise.zeta2.len() != n {
        return Err(MirrorError::DimensionMismatch(format!(
            "noise length {} for {n} rows",
            noise.zeta1.len()
        )));
    }
    if j >= p {
        return Err(MirrorError::DimensionMismatch(format!(
            "feature {j} out of range for p={p}"
        )));
    }
    let zeta = match copy {
        MirrorCopy::First => &noise.zeta1,
        MirrorCopy::Second => &noise.zeta2,
    };
    let x = design.values();
    let mut matrix = Array2::<f64>::zeros((n, p + 1));
    for i in 0..n {
        matrix[[i, 0]] = x[[i, j]] + zeta[i];
        matrix[[i, 1]] = x[[i, j]] - zeta[i];
    }
    let mut c = 2;
    for k in 0..p {
        if k == j {
            continue;
        }
        matrix.column_mut(c).assign(&x.column(k));
        c += 1;
    }
    Ok(MirrorDesign {
        matrix,
        feature_index: j,
        copy,
    })
}

/// Nonnegative score folding a (beta_plus, beta_minus) pair into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ScoreForm {
    /// 4 |beta_plus * beta_minus| (the tested default).
    #[default]
    Product,
    /// |beta_plus| + |beta_minus|.
    Sum,
}

impl ScoreForm {
    pub fn score(&self, plus: f64, minus: f64) -> f64 {
        match self {
            ScoreForm::Product => 4.0 * (plus * minus).abs(),
            ScoreForm::Sum => plus.abs() + minus.abs(),
        }
    }
}

/// Leading mirror coefficients from the two augmented fits of one feature.
#[derive(Debug, Clone, Copy)]
pub struct MirrorPairFit {
    pub plus1: f64,
    pub minus1: f64,
    pub plus2: f64,
    pub minus2: f64,
    pub converged: bool,
}

/// Fit the two augmented models for feature j and return the leading two
/// coefficients of each. The optional warm start is a full-model fit whose
/// j-th coefficient is split equally onto the two mirror coordinates.
pub fn fit_mirror_pair(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    feature: usize,
    noise: &MirrorNoise,
    lambda: f64,
    warm_start: Option<&LassoFit>,
) -> Result<MirrorPairFit, MirrorError> {
    let p = design.p();
    let warm = warm_start.map(|fit| {
        let mut w = Array1::<f64>::zeros(p + 1);
        w[0] = fit.coefficients[feature] / 2.0;
        w[1] = fit.coefficients[feature] / 2.0;
        let mut c = 2;
        for k in 0..p {
            if k == feature {
                continue;
            }
            w[c] = fit.coefficients[k];
            c += 1;
        }
        (w, fit.intercept)
    });

    let run = |copy: MirrorCopy| -> Result<LassoFit, MirrorError> {
        let md = build_mirror_design(design, noise, copy)?;
        let ws = warm.as_ref().map(|(w, b0)| (w.view(), *b0));
        let fit = match family {
            GlmFamily::Linear => lasso_linear(md.matrix.view(), response, lambda, ws),
            GlmFamily::Logistic => lasso_logistic(md.matrix.view(), response, lambda, ws),
        };
        fit.map_err(|source| MirrorError::FitFailed {
            feature,
            copy: copy.stream() as u8,
            source,
        })
    };

    let fit1 = run(MirrorCopy::First)?;
    let fit2 = run(MirrorCopy::Second)?;
    Ok(MirrorPairFit {
        plus1: fit1.coefficients[0],
        minus1: fit1.coefficients[1],
        plus2: fit2.coefficients[0],
        minus2: fit2.coefficients[1],
        converged: fit1.converged && fit2.converged,
    })
}

/// Per-feature mirror scores for the whole design.
#[derive(Debug, Clone)]
pub struct FeatureMirrorScores {
    pub w1: Array1<f64>,
    pub w2: Array1<f64>,
    pub beta_plus1: Array1<f64>,
    pub beta_minus1: Array1<f64>,
    pub beta_plus2: Array1<f64>,
    pub beta_minus2: Array1<f64>,
    /// Per-feature substream seeds that regenerate the noise draws.
    pub noise_seeds: Vec<u64>,
    pub form: ScoreForm,
}

impl FeatureMirrorScores {
    pub fn p(&self) -> usize {
        self.w1.len()
    }
}

/// Compute (W_j^(1), W_j^(2)) for every feature. Work is a parallel map
/// over features with order-independent substreams, so the result does not
/// depend on scheduling; any per-feature failure fails the whole call.
pub fn compute_all_scores(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    lambda: f64,
    master_seed: u64,
    warm_start: Option<&LassoFit>,
    form: ScoreForm,
) -> Result<FeatureMirrorScores, MirrorError> {
    let n = design.n();
    let p = design.p();
    if response.len() != n {
        return Err(MirrorError::DimensionMismatch(format!(
            "response length {} for {n} rows",
            response.len()
        )));
    }
    let results: Vec<Result<(MirrorPairFit, u64), MirrorError>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let noise = draw_mirror_noise(j, n, master_seed);
            let seed = noise.stream_seed;
            fit_mirror_pair(design, response, family, j, &noise, lambda, warm_start)
                .map(|pair| (pair, seed))
        })
        .collect();

    let mut w1 = Array1::<f64>::zeros(p);
    let mut w2 = Array1::<f64>::zeros(p);
    let mut bp1 = Array1::<f64>::zeros(p);
    let mut bm1 = Array1::<f64>::zeros(p);
    let mut bp2 = Array1::<f64>::zeros(p);
    let mut bm2 = Array1::<f64>::zeros(p);
    let mut seeds = vec![0u64; p];
    for (j, res) in results.into_iter().enumerate() {
        let (pair, seed) = res?;
        bp1[j] = pair.plus1;
        bm1[j] = pair.minus1;
        bp2[j] = pair.plus2;
        bm2[j] = pair.minus2;
        w1[j] = form.score(pair.plus1, pair.minus1);
        w2[j] = form.score(pair.plus2, pair.minus2);
        seeds[j] = seed;
    }
    Ok(FeatureMirrorScores {
        w1,
        w2,
        beta_plus1: bp1,
        beta_minus1: bm1,
        beta_plus2: bp2,
        beta_minus2: bm2,
        noise_seeds: seeds,
        form,
    })
}

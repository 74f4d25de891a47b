//! Self-guiding selection: weights from the initial fit, the asymmetric
//! mirror contrast, the estimated-FDP cutoff, and the kappa search.

use ndarray::{Array1, ArrayView1};
use thiserror::Error;

use crate::glm::{
    lasso_linear, lasso_logistic, select_lambda, GlmFamily, LambdaRule, LassoFit,
    StandardizedDesign,
};
use crate::mirrors::{compute_all_scores, FeatureMirrorScores, ScoreForm};
use crate::BgmError;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error("kappa must be finite and >= 1, got {0}")]
    InvalidKappa(f64),
    #[error("kappa grid must be non-empty, ascending, and all >= 1")]
    InvalidKappaGrid,
    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("target FDR level must lie in (0,1), got {0}")]
    InvalidLevel(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Per-feature weights gamma_j = (|beta_j| + 1)^(-kappa), together with the
/// coefficients they were derived from.
#[derive(Debug, Clone)]
pub struct WeightVector {
    pub gamma: Array1<f64>,
    pub kappa: f64,
    pub source_beta: Array1<f64>,
}

pub fn estimate_weights(beta_hat: ArrayView1<f64>, kappa: f64) -> Result<WeightVector, SelectorError> {
    if !kappa.is_finite() || kappa < 1.0 {
        return Err(SelectorError::InvalidKappa(kappa));
    }
    let gamma = beta_hat.mapv(|b| 1.0 / (b.abs() + 1.0).powf(kappa));
    Ok(WeightVector {
        gamma,
        kappa,
        source_beta: beta_hat.to_owned(),
    })
}

/// The statistic vector M_j = W_j^(1) - gamma_j * W_j^(2), with the weights
/// and second scores kept for the count windows below.
#[derive(Debug, Clone)]
pub struct BgmStatVector {
    pub m_hat: Array1<f64>,
    pub weights: WeightVector,
    pub w2: Array1<f64>,
}

pub fn bgm_statistics(
    scores: &FeatureMirrorScores,
    weights: &WeightVector,
) -> Result<BgmStatVector, SelectorError> {
    let p = scores.p();
    if weights.gamma.len() != p {
        return Err(SelectorError::DimensionMismatch(format!(
            "{} weights for {p} scores",
            weights.gamma.len()
        )));
    }
    let mut m_hat = Array1::<f64>::zeros(p);
    for j in 0..p {
        m_hat[j] = scores.w1[j] - weights.gamma[j] * scores.w2[j];
    }
    Ok(BgmStatVector {
        m_hat,
        weights: weights.clone(),
        w2: scores.w2.clone(),
    })
}

/// Counts entering the estimated-FDP ratio at threshold t. The third count
/// is diagnostic only; the cutoff ratio uses (v1 + v2) / denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FdpComponents {
    /// #{j : M_j < -t}
    pub v1: usize,
    /// #{j : t <= M_j < t / gamma_j}
    pub v2: usize,
    /// #{j : t/gamma_j <= M_j <= t/gamma_j + (1/gamma_j - gamma_j) W_j^(2)}
    pub v3: usize,
    /// max(#{j : M_j > t}, 1)
    pub denominator: usize,
}

pub fn fdp_components(stats: &BgmStatVector, t: f64) -> Result<FdpComponents, SelectorError> {
    if !(t > 0.0) {
        return Err(SelectorError::InvalidThreshold(t));
    }
    let mut v1 = 0;
    let mut v2 = 0;
    let mut v3 = 0;
    let mut above = 0;
    for j in 0..stats.m_hat.len() {
        let m = stats.m_hat[j];
        let g = stats.weights.gamma[j];
        if m < -t {
            v1 += 1;
        }
        if m > t {
            above += 1;
        }
        let upper = t / g;
        if t <= m && m < upper {
            v2 += 1;
        }
        if upper <= m && m <= upper + (1.0 / g - g) * stats.w2[j] {
            v3 += 1;
        }
    }
    Ok(FdpComponents {
        v1,
        v2,
        v3,
        denominator: above.max(1),
    })
}

/// Candidate thresholds: one probe just below each distinct positive value
/// of |M_j|. The offset is half the smallest gap between consecutive
/// distinct values, counting the gap from zero up to the smallest, so every
/// candidate is positive and admits exactly the points at and above its
/// anchor value.
pub fn threshold_candidates(m_hat: ArrayView1<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m_hat.iter().map(|v| v.abs()).filter(|&a| a > 0.0).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup();
    if vals.is_empty() {
        return Vec::new();
    }
    let mut min_gap = vals[0];
    for w in vals.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    let eta = min_gap / 2.0;
    vals.iter().map(|v| v - eta).collect()
}

/// One evaluated candidate threshold.
#[derive(Debug, Clone, Copy)]
pub struct FdpCurvePoint {
    pub t: f64,
    pub v1: usize,
    pub v2: usize,
    pub v3: usize,
    pub denominator: usize,
    pub ratio: f64,
}

/// Result of the cutoff search. `tau` is +infinity when no candidate
/// satisfies the bound, which selects the empty set.
#[derive(Debug, Clone)]
pub struct CutoffResult {
    pub tau: f64,
    pub fdp_curve: Vec<FdpCurvePoint>,
    pub q: f64,
}

pub fn compute_cutoff(stats: &BgmStatVector, q: f64) -> Result<CutoffResult, SelectorError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SelectorError::InvalidLevel(q));
    }
    let candidates = threshold_candidates(stats.m_hat.view());
    let mut curve = Vec::with_capacity(candidates.len());
    let mut tau = f64::INFINITY;
    for t in candidates {
        let c = fdp_components(stats, t)?;
        let ratio = (c.v1 + c.v2) as f64 / c.denominator as f64;
        if tau.is_infinite() && ratio <= q {
            tau = t;
        }
        curve.push(FdpCurvePoint {
            t,
            v1: c.v1,
            v2: c.v2,
            v3: c.v3,
            denominator: c.denominator,
            ratio,
        });
    }
    Ok(CutoffResult {
        tau,
        fdp_curve: curve,
        q,
    })
}

/// Indices with M_j strictly above tau, ascending. An infinite tau yields
/// the empty set.
pub fn select_at(stats: &BgmStatVector, tau: f64) -> Vec<usize> {
    stats
        .m_hat
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > tau)
        .map(|(j, _)| j)
        .collect()
}

/// Outcome of one kappa value.
#[derive(Debug, Clone)]
pub struct KappaRecord {
    pub kappa: f64,
    pub tau: f64,
    pub selected: Vec<usize>,
    pub size: usize,
}

/// Full selection output: the per-kappa records, the winning kappa, and the
/// shared intermediates (penalty, initial fit, mirror scores).
#[derive(Debug, Clone)]
pub struct BgmSelection {
    pub per_kappa: Vec<KappaRecord>,
    pub kappa_max: f64,
    pub final_selected: Vec<usize>,
    pub lambda: f64,
    pub initial_fit: LassoFit,
    pub scores: FeatureMirrorScores,
}

/// Smallest index attaining the maximal selection size.
fn argmax_smallest_kappa(records: &[KappaRecord]) -> usize {
    let mut best = 0;
    for (i, r) in records.iter().enumerate().skip(1) {
        if r.size > records[best].size {
            best = i;
        }
    }
    best
}

fn validate_kappa_grid(grid: &[f64]) -> Result<(), SelectorError> {
    if grid.is_empty() {
        return Err(SelectorError::InvalidKappaGrid);
    }
    for w in grid.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(SelectorError::InvalidKappaGrid);
        }
    }
    for &k in grid {
        if !k.is_finite() || k < 1.0 {
            return Err(SelectorError::InvalidKappaGrid);
        }
    }
    Ok(())
}

enum WeightScheme<'a> {
    SelfGuiding(&'a [f64]),
    Symmetric,
}

fn run_pipeline(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    scheme: WeightScheme<'_>,
    q: f64,
    master_seed: u64,
    lambda_rule: &LambdaRule,
    form: ScoreForm,
) -> Result<BgmSelection, BgmError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SelectorError::InvalidLevel(q).into());
    }
    if let WeightScheme::SelfGuiding(grid) = &scheme {
        validate_kappa_grid(grid)?;
    }
    let lambda = select_lambda(design, response, family, lambda_rule)?;
    let initial_fit = match family {
        GlmFamily::Linear => lasso_linear(design.values(), response, lambda, None)?,
        GlmFamily::Logistic => lasso_logistic(design.values(), response, lambda, None)?,
    };
    // the expensive mirror stage runs exactly once, shared across kappa
    let scores = compute_all_scores(
        design,
        response,
        family,
        lambda,
        master_seed,
        Some(&initial_fit),
        form,
    )?;

    let weight_sets: Vec<WeightVector> = match scheme {
        WeightScheme::SelfGuiding(grid) => grid
            .iter()
            .map(|&kappa| estimate_weights(initial_fit.coefficients.view(), kappa))
            .collect::<Result<_, _>>()?,
        WeightScheme::Symmetric => {
            let zeros = Array1::<f64>::zeros(design.p());
            vec![estimate_weights(zeros.view(), 1.0)?]
        }
    };

    let mut per_kappa = Vec::with_capacity(weight_sets.len());
    for weights in &weight_sets {
        let stats = bgm_statistics(&scores, weights)?;
        let cut = compute_cutoff(&stats, q)?;
        let selected = select_at(&stats, cut.tau);
        per_kappa.push(KappaRecord {
            kappa: weights.kappa,
            tau: cut.tau,
            size: selected.len(),
            selected,
        });
    }
    let best = argmax_smallest_kappa(&per_kappa);
    let kappa_max = per_kappa[best].kappa;
    let final_selected = per_kappa[best].selected.clone();
    Ok(BgmSelection {
        per_kappa,
        kappa_max,
        final_selected,
        lambda,
        initial_fit,
        scores,
    })
}

/// The full self-guiding procedure: initial fit, one shared mirror pass,
/// then per-kappa weights, statistics, cutoff, and selection; the kappa
/// with the largest selected set wins (smallest such kappa on ties).
pub fn self_guiding_select(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    kappa_grid: &[f64],
    q: f64,
    master_seed: u64,
    lambda_rule: &LambdaRule,
) -> Result<BgmSelection, BgmError> {
    run_pipeline(
        design,
        response,
        family,
        WeightScheme::SelfGuiding(kappa_grid),
        q,
        master_seed,
        lambda_rule,
        ScoreForm::Product,
    )
}

/// Same pipeline with a configurable score functional.
pub fn self_guiding_select_with_form(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    kappa_grid: &[f64],
    q: f64,
    master_seed: u64,
    lambda_rule: &LambdaRule,
    form: ScoreForm,
) -> Result<BgmSelection, BgmError> {
    run_pipeline(
        design,
        response,
        family,
        WeightScheme::SelfGuiding(kappa_grid),
        q,
        master_seed,
        lambda_rule,
        form,
    )
}

/// Baseline with gamma identically one: the statistic is the symmetric
/// contrast W^(1) - W^(2) and the ratio reduces to
/// #{M < -t} / max(#{M > t}, 1).
pub fn symmetric_baseline_select(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    q: f64,
    master_seed: u64,
    lambda_rule: &LambdaRule,
) -> Result<BgmSelection, BgmError> {
    run_pipeline(
        design,
        response,
        family,
        WeightScheme::Symmetric,
        q,
        master_seed,
        lambda_rule,
        ScoreForm::Product,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::standardize_columns;
    use crate::rng::seeded_rng;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn stats_from(m: &[f64], gamma: &[f64], w2: &[f64]) -> BgmStatVector {
        BgmStatVector {
            m_hat: Array1::from_vec(m.to_vec()),
            weights: WeightVector {
                gamma: Array1::from_vec(gamma.to_vec()),
                kappa: 1.0,
                source_beta: Array1::zeros(m.len()),
            },
            w2: Array1::from_vec(w2.to_vec()),
        }
    }

    #[test]
    fn weight_examples() {
        let w = estimate_weights(array![0.0, 1.0].view(), 1.0).unwrap();
        assert_eq!(w.gamma[0], 1.0);
        assert_eq!(w.gamma[1], 0.5);
        let w = estimate_weights(array![1.0].view(), 2.0).unwrap();
        assert_eq!(w.gamma[0], 0.25);
        assert!(matches!(
            estimate_weights(array![0.0].view(), 0.5),
            Err(SelectorError::InvalidKappa(_))
        ));
        assert!(matches!(
            estimate_weights(array![0.0].view(), f64::NAN),
            Err(SelectorError::InvalidKappa(_))
        ));
    }

    proptest! {
        #[test]
        fn weights_stay_in_unit_interval_and_decrease(
            b in proptest::collection::vec(-20.0f64..20.0, 1..30),
            kappa in 1.0f64..8.0,
        ) {
            let beta = Array1::from_vec(b);
            let w = estimate_weights(beta.view(), kappa).unwrap();
            for j in 0..beta.len() {
                prop_assert!(w.gamma[j] > 0.0 && w.gamma[j] <= 1.0);
                prop_assert_eq!(w.gamma[j] == 1.0, beta[j] == 0.0);
            }
        }

        #[test]
        fn weights_monotone_in_beta_and_kappa(
            m1 in 0.001f64..10.0,
            extra in 0.001f64..10.0,
            kappa in 1.0f64..6.0,
        ) {
            let m2 = m1 + extra;
            let beta = array![m1, m2];
            let w = estimate_weights(beta.view(), kappa).unwrap();
            prop_assert!(w.gamma[0] > w.gamma[1]);
            let wk = estimate_weights(beta.view(), kappa + 1.0).unwrap();
            prop_assert!(wk.gamma[0] < w.gamma[0]);
        }
    }

    #[test]
    fn weight_functional_limits() {
        let w = estimate_weights(array![0.0, 1e9].view(), 3.0).unwrap();
        assert_eq!(w.gamma[0], 1.0);
        assert!(w.gamma[1] < 1e-20);
    }

    #[test]
    fn statistic_arithmetic() {
        let scores = FeatureMirrorScores {
            w1: array![1.0, 0.7, 0.4],
            w2: array![0.5, 0.0, 0.4],
            beta_plus1: Array1::zeros(3),
            beta_minus1: Array1::zeros(3),
            beta_plus2: Array1::zeros(3),
            beta_minus2: Array1::zeros(3),
            noise_seeds: vec![0; 3],
            form: ScoreForm::Product,
        };
        let weights = WeightVector {
            gamma: array![0.8, 0.3, 1.0],
            kappa: 1.0,
            source_beta: Array1::zeros(3),
        };
        let stats = bgm_statistics(&scores, &weights).unwrap();
        assert!((stats.m_hat[0] - 0.6).abs() < 1e-15);
        assert_eq!(stats.m_hat[1], 0.7); // w2 = 0 leaves w1
        assert_eq!(stats.m_hat[2], 0.0); // gamma 1, equal scores cancel
        let short = WeightVector {
            gamma: array![1.0],
            kappa: 1.0,
            source_beta: Array1::zeros(1),
        };
        assert!(matches!(
            bgm_statistics(&scores, &short),
            Err(SelectorError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fdp_component_hand_enumeration() {
        // M = [3, -4], gamma = [0.5, 1], t = 2
        let stats = stats_from(&[3.0, -4.0], &[0.5, 1.0], &[0.0, 0.0]);
        let c = fdp_components(&stats, 2.0).unwrap();
        assert_eq!(c.v1, 1);
        assert_eq!(c.v2, 1);
        assert_eq!(c.v3, 0);
        assert_eq!(c.denominator, 1);
    }

    #[test]
    fn fdp_components_empty_tails() {
        let stats = stats_from(&[0.5, -0.2, 0.1], &[0.9, 0.9, 0.9], &[0.1, 0.1, 0.1]);
        let c = fdp_components(&stats, 10.0).unwrap();
        assert_eq!((c.v1, c.v2, c.v3), (0, 0, 0));
        assert_eq!(c.denominator, 1);
    }

    #[test]
    fn unit_gamma_empties_the_interval_count() {
        let mut rng = seeded_rng(5);
        for _ in 0..100 {
            let p = 20;
            let m: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let w2: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let stats = stats_from(&m, &vec![1.0; p], &w2);
            for t in [0.1, 0.5, 1.3] {
                let c = fdp_components(&stats, t).unwrap();
                assert_eq!(c.v2, 0);
                // with gamma = 1 the third window collapses to M == t
                let collapsed = m.iter().filter(|&&v| v == t).count();
                assert_eq!(c.v3, collapsed);
            }
        }
    }

    #[test]
    fn rejects_bad_threshold_and_level() {
        let stats = stats_from(&[1.0], &[1.0], &[0.0]);
        assert!(matches!(
            fdp_components(&stats, 0.0),
            Err(SelectorError::InvalidThreshold(_))
        ));
        assert!(matches!(
            fdp_components(&stats, -1.0),
            Err(SelectorError::InvalidThreshold(_))
        ));
        assert!(matches!(
            compute_cutoff(&stats, 0.0),
            Err(SelectorError::InvalidLevel(_))
        ));
        assert!(matches!(
            compute_cutoff(&stats, 1.0),
            Err(SelectorError::InvalidLevel(_))
        ));
    }

    #[test]
    fn all_nonpositive_statistics_are_infeasible() {
        let stats = stats_from(&[0.0, -1.0, -0.3], &[1.0, 0.5, 0.7], &[0.1, 0.2, 0.3]);
        let cut = compute_cutoff(&stats, 0.5).unwrap();
        assert!(cut.tau.is_infinite());
        assert!(select_at(&stats, cut.tau).is_empty());
    }

    #[test]
    fn symmetric_toy_selects_top_three() {
        let stats = stats_from(&[5.0, 4.0, 3.0, -1.0], &[1.0; 4], &[0.0; 4]);
        let cut = compute_cutoff(&stats, 0.5).unwrap();
        // distinct positives [1,3,4,5], min gap (incl. 0 to 1) is 1, eta 0.5;
        // the first candidate 0.5 already passes: ratio 1/3 <= 0.5
        assert!((cut.tau - 0.5).abs() < 1e-12);
        assert_eq!(select_at(&stats, cut.tau), vec![0, 1, 2]);
        let at_tau = fdp_components(&stats, cut.tau).unwrap();
        assert!((at_tau.v1 + at_tau.v2) as f64 / at_tau.denominator as f64 <= 0.5);
    }

    /// Independent scan: recompute distinct values, offset, and counts with
    /// fresh code and return the first feasible candidate.
    fn brute_force_cutoff(m: &[f64], gamma: &[f64], q: f64) -> (f64, Vec<usize>) {
        let mut vals: Vec<f64> = m.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        if vals.is_empty() {
            return (f64::INFINITY, Vec::new());
        }
        let mut gap = vals[0];
        for k in 1..vals.len() {
            if vals[k] - vals[k - 1] < gap {
                gap = vals[k] - vals[k - 1];
            }
        }
        for v in &vals {
            let t = v - gap / 2.0;
            let mut v1 = 0usize;
            let mut v2 = 0usize;
            let mut above = 0usize;
            for j in 0..m.len() {
                if m[j] < -t {
                    v1 += 1;
                }
                if m[j] > t {
                    above += 1;
                }
                if t <= m[j] && m[j] < t / gamma[j] {
                    v2 += 1;
                }
            }
            if (v1 + v2) as f64 / above.max(1) as f64 <= q {
                let sel = (0..m.len()).filter(|&j| m[j] > t).collect();
                return (t, sel);
            }
        }
        (f64::INFINITY, Vec::new())
    }

    #[test]
    fn cutoff_matches_brute_force_on_random_instances() {
        let mut rng = seeded_rng(77);
        for trial in 0..100 {
            let p = 2 + (rng.random::<u64>() % 49) as usize;
            let m: Vec<f64> = (0..p)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0)
                .collect();
            let gamma: Vec<f64> = (0..p).map(|_| 0.05 + 0.95 * rng.random::<f64>()).collect();
            let w2: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let q = 0.05 + 0.4 * rng.random::<f64>();
            let stats = stats_from(&m, &gamma, &w2);
            let cut = compute_cutoff(&stats, q).unwrap();
            let (bf_tau, bf_sel) = brute_force_cutoff(&m, &gamma, q);
            assert_eq!(
                select_at(&stats, cut.tau),
                bf_sel,
                "trial {trial}: selected sets differ"
            );
            if bf_tau.is_finite() {
                assert!(
                    (cut.tau - bf_tau).abs() <= 1e-12 * bf_tau.abs().max(1.0),
                    "trial {trial}: tau {} vs brute force {bf_tau}",
                    cut.tau
                );
            } else {
                assert!(cut.tau.is_infinite());
            }
        }
    }

    #[test]
    fn nesting_in_q() {
        let mut rng = seeded_rng(88);
        for _ in 0..50 {
            let p = 30;
            let m: Vec<f64> = (0..p)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * 1.5)
                .collect();
            let gamma: Vec<f64> = (0..p).map(|_| 0.1 + 0.9 * rng.random::<f64>()).collect();
            let stats = stats_from(&m, &gamma, &vec![0.2; p]);
            let (q1, q2) = (0.05, 0.3);
            let c1 = compute_cutoff(&stats, q1).unwrap();
            let c2 = compute_cutoff(&stats, q2).unwrap();
            assert!(c1.tau >= c2.tau);
            let s1 = select_at(&stats, c1.tau);
            let s2 = select_at(&stats, c2.tau);
            assert!(s1.iter().all(|j| s2.contains(j)));
        }
    }

    #[test]
    fn positive_scaling_rescales_tau_and_keeps_the_selection() {
        let mut rng = seeded_rng(99);
        for &c in &[0.37, 2.0, 13.7] {
            for _ in 0..30 {
                let p = 25;
                let m: Vec<f64> = (0..p)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let gamma: Vec<f64> = (0..p).map(|_| 0.2 + 0.8 * rng.random::<f64>()).collect();
                let w2: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
                let stats = stats_from(&m, &gamma, &w2);
                let scaled: Vec<f64> = m.iter().map(|v| v * c).collect();
                let w2s: Vec<f64> = w2.iter().map(|v| v * c).collect();
                let stats_c = stats_from(&scaled, &gamma, &w2s);
                let a = compute_cutoff(&stats, 0.2).unwrap();
                let b = compute_cutoff(&stats_c, 0.2).unwrap();
                assert_eq!(select_at(&stats, a.tau), select_at(&stats_c, b.tau));
                if a.tau.is_finite() {
                    assert!(
                        (b.tau - c * a.tau).abs() <= 1e-12 * (c * a.tau).abs(),
                        "tau {} scaled {} expected {}",
                        a.tau,
                        b.tau,
                        c * a.tau
                    );
                }
            }
        }
    }

    #[test]
    fn kappa_argmax_takes_smallest_on_ties() {
        let records: Vec<KappaRecord> = [(1.0, 3), (2.0, 5), (3.0, 5)]
            .iter()
            .map(|&(kappa, size)| KappaRecord {
                kappa,
                tau: 1.0,
                selected: (0..size).collect(),
                size,
            })
            .collect();
        assert_eq!(argmax_smallest_kappa(&records), 1);
        assert_eq!(records[argmax_smallest_kappa(&records)].kappa, 2.0);
    }

    #[test]
    fn kappa_grid_validation() {
        assert!(validate_kappa_grid(&[]).is_err());
        assert!(validate_kappa_grid(&[0.5, 2.0]).is_err());
        assert!(validate_kappa_grid(&[2.0, 1.0]).is_err());
        assert!(validate_kappa_grid(&[1.0, f64::NAN]).is_err());
        assert!(validate_kappa_grid(&[1.0, 2.0, 10.0]).is_ok());
    }

    fn simulated(
        n: usize,
        p: usize,
        beta: &[f64],
        seed: u64,
    ) -> (StandardizedDesign, Array1<f64>) {
        let mut rng = seeded_rng(seed);
        let raw = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array1::from_shape_fn(n, |i| {
            let eta: f64 = (0..p).map(|j| raw[[i, j]] * beta[j]).sum();
            eta + rng.sample::<f64, _>(StandardNormal)
        });
        (standardize_columns(raw.view()).unwrap(), y)
    }

    #[test]
    fn singleton_grid_matches_direct_pipeline() {
        let mut beta = vec![0.0; 12];
        beta[0] = 1.5;
        beta[5] = -1.2;
        let (design, y) = simulated(150, 12, &beta, 404);
        let rule = LambdaRule::fixed(0.05);
        let sel = self_guiding_select(
            &design,
            y.view(),
            GlmFamily::Linear,
            &[2.0],
            0.2,
            9,
            &rule,
        )
        .unwrap();
        assert_eq!(sel.per_kappa.len(), 1);
        assert_eq!(sel.kappa_max, 2.0);
        // replay the fixed-kappa pipeline by hand
        let initial = lasso_linear(design.values(), y.view(), 0.05, None).unwrap();
        let scores = compute_all_scores(
            &design,
            y.view(),
            GlmFamily::Linear,
            0.05,
            9,
            Some(&initial),
            ScoreForm::Product,
        )
        .unwrap();
        let weights = estimate_weights(initial.coefficients.view(), 2.0).unwrap();
        let stats = bgm_statistics(&scores, &weights).unwrap();
        let cut = compute_cutoff(&stats, 0.2).unwrap();
        assert_eq!(sel.final_selected, select_at(&stats, cut.tau));
        assert_eq!(sel.per_kappa[0].tau.to_bits(), cut.tau.to_bits());
    }

    #[test]
    fn baseline_equals_pipeline_with_zeroed_weights() {
        let mut beta = vec![0.0; 10];
        beta[2] = 1.4;
        let (design, y) = simulated(120, 10, &beta, 505);
        let rule = LambdaRule::fixed(0.06);
        let base = symmetric_baseline_select(&design, y.view(), GlmFamily::Linear, 0.2, 3, &rule)
            .unwrap();
        // gamma == 1 makes the interval count vanish at every threshold
        let zeros = Array1::<f64>::zeros(10);
        let weights = estimate_weights(zeros.view(), 1.0).unwrap();
        let stats = bgm_statistics(&base.scores, &weights).unwrap();
        for t in threshold_candidates(stats.m_hat.view()) {
            let c = fdp_components(&stats, t).unwrap();
            assert_eq!(c.v2, 0);
        }
        let cut = compute_cutoff(&stats, 0.2).unwrap();
        assert_eq!(base.final_selected, select_at(&stats, cut.tau));
        assert_eq!(base.per_kappa.len(), 1);
    }

    #[test]
    fn cutoff_feasibility_invariant_holds() {
        let mut beta = vec![0.0; 15];
        beta[1] = 1.8;
        beta[8] = 1.1;
        let (design, y) = simulated(180, 15, &beta, 606);
        let sel = self_guiding_select(
            &design,
            y.view(),
            GlmFamily::Linear,
            &[1.0, 2.0, 3.0],
            0.25,
            11,
            &LambdaRule::fixed(0.05),
        )
        .unwrap();
        for rec in &sel.per_kappa {
            if rec.tau.is_finite() {
                let weights =
                    estimate_weights(sel.initial_fit.coefficients.view(), rec.kappa).unwrap();
                let stats = bgm_statistics(&sel.scores, &weights).unwrap();
                let c = fdp_components(&stats, rec.tau).unwrap();
                assert!((c.v1 + c.v2) as f64 / c.denominator as f64 <= 0.25);
            }
        }
    }
}

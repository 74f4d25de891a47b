//! Simulation harness: block-Toeplitz covariates, signal and response
//! generation, seeded replicate execution, and FDP/power scoring against
//! the known truth.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::glm::{standardize_columns, GlmFamily, LambdaRule};
use crate::rng::{derive_seed, seeded_rng};
use crate::selector::{self_guiding_select, symmetric_baseline_select, BgmSelection};

const TAG_REPLICATE: u64 = 0x7265_7000;
const TAG_COVARIATES: u64 = 1;
const TAG_SIGNALS: u64 = 2;
const TAG_RESPONSE: u64 = 3;
const TAG_MIRRORS: u64 = 4;
const TAG_FOLDS: u64 = 5;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("covariance is not positive semidefinite")]
    NotPsd,
    #[error("selected index {0} out of range for p={1}")]
    IndexOutOfRange(usize, usize),
}

/// Blockwise-diagonal covariance made of 10 identical unit-diagonal
/// Toeplitz blocks of size p' = p/10 whose off-diagonals decay linearly
/// from (p'-2) rho / (p'-1) down to zero at lag p'-1.
#[derive(Debug, Clone, Copy)]
pub struct BlockToeplitzSpec {
    pub p: usize,
    pub rho: f64,
}

impl BlockToeplitzSpec {
    pub fn block_size(&self) -> usize {
        self.p / 10
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p == 0 || self.p % 10 != 0 {
            return Err(SimError::InvalidSpec(format!(
                "p must be a positive multiple of 10, got {}",
                self.p
            )));
        }
        if self.block_size() < 2 {
            return Err(SimError::InvalidSpec(format!(
                "block size p/10 must be >= 2, got {}",
                self.block_size()
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(SimError::InvalidSpec(format!(
                "rho must lie in (0,1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

pub fn build_block_toeplitz(spec: &BlockToeplitzSpec) -> Result<Array2<f64>, SimError> {
    spec.validate()?;
    let p = spec.p;
    let bs = spec.block_size();
    let denom = (bs - 1) as f64;
    let mut cov = Array2::<f64>::zeros((p, p));
    for block in 0..10 {
        let off = block * bs;
        for a in 0..bs {
            for b in 0..bs {
                let d = a.abs_diff(b);
                cov[[off + a, off + b]] = if d == 0 {
                    1.0
                } else if d == bs - 1 {
                    0.0
                } else {
                    (bs - d - 1) as f64 * spec.rho / denom
                };
            }
        }
    }
    Ok(cov)
}

/// Plain lower-triangular Cholesky factorization.
pub fn chol_lower(cov: ArrayView2<f64>) -> Result<Array2<f64>, SimError> {
    let p = cov.nrows();
    if cov.ncols() != p {
        return Err(SimError::InvalidSpec(format!(
            "covariance must be square, got {p}x{}",
            cov.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let mut s = cov[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(SimError::NotPsd);
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Cholesky with a single 1e-10 diagonal jitter retry.
pub fn psd_factor(cov: ArrayView2<f64>) -> Result<Array2<f64>, SimError> {
    match chol_lower(cov) {
        Ok(l) => Ok(l),
        Err(SimError::NotPsd) => {
            let mut jittered = cov.to_owned();
            for i in 0..jittered.nrows() {
                jittered[[i, i]] += 1e-10;
            }
            chol_lower(jittered.view())
        }
        Err(e) => Err(e),
    }
}

/// Draw n rows i.i.d. N(0, L L') from a precomputed lower factor.
pub fn sample_mvn_factored(chol: &Array2<f64>, n: usize, seed: u64) -> Array2<f64> {
    let p = chol.nrows();
    let mut rng = seeded_rng(seed);
    let mut x = Array2::<f64>::zeros((n, p));
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zk in z.iter_mut() {
            *zk = rng.sample(StandardNormal);
        }
        for j in 0..p {
            let row = chol.row(j);
            let mut acc = 0.0;
            for k in 0..=j {
                acc += row[k] * z[k];
            }
            x[[i, j]] = acc;
        }
    }
    x
}

/// Draw n rows i.i.d. N(0, cov) via a triangular factorization.
pub fn sample_mvn(cov: ArrayView2<f64>, n: usize, seed: u64) -> Result<Array2<f64>, SimError> {
    let l = psd_factor(cov)?;
    Ok(sample_mvn_factored(&l, n, seed))
}

/// The simulated truth: which features carry signal, and the coefficients.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub h1_indices: Vec<usize>,
    pub beta: Array1<f64>,
}

fn draw_h1_indices(p: usize, s: usize, seed: u64) -> Vec<usize> {
    let mut all: Vec<usize> = (0..p).collect();
    all.shuffle(&mut seeded_rng(derive_seed(seed, &[TAG_SIGNALS, 1])));
    let mut h1: Vec<usize> = all.into_iter().take(s).collect();
    h1.sort_unstable();
    h1
}

/// Linear-model truth: s uniformly chosen signals with amplitudes drawn
/// from Unif(delta * sqrt(log p / n), delta * sqrt(log p / n) + 0.2).
pub fn gen_beta_linear(
    p: usize,
    s: usize,
    delta: f64,
    n: usize,
    seed: u64,
) -> Result<GroundTruth, SimError> {
    if s > p || p == 0 || n == 0 {
        return Err(SimError::InvalidSpec(format!(
            "signal count {s} for p={p}, n={n}"
        )));
    }
    let h1 = draw_h1_indices(p, s, seed);
    let lower = delta * ((p as f64).ln() / n as f64).sqrt();
    let mut rng = seeded_rng(derive_seed(seed, &[TAG_SIGNALS, 2]));
    let mut beta = Array1::<f64>::zeros(p);
    for &j in &h1 {
        beta[j] = lower + 0.2 * rng.random::<f64>();
    }
    Ok(GroundTruth {
        h1_indices: h1,
        beta,
    })
}

/// Logistic-model truth: every signal coefficient equals
/// delta * sqrt(log p / n).
pub fn gen_beta_logistic(
    p: usize,
    s: usize,
    delta: f64,
    n: usize,
    seed: u64,
) -> Result<GroundTruth, SimError> {
    if s > p || p == 0 || n == 0 {
        return Err(SimError::InvalidSpec(format!(
            "signal count {s} for p={p}, n={n}"
        )));
    }
    let h1 = draw_h1_indices(p, s, seed);
    let magnitude = delta * ((p as f64).ln() / n as f64).sqrt();
    let mut beta = Array1::<f64>::zeros(p);
    for &j in &h1 {
        beta[j] = magnitude;
    }
    Ok(GroundTruth {
        h1_indices: h1,
        beta,
    })
}

/// Simulate the response: y = X beta + N(0, I) for the linear family,
/// independent Bernoulli(sigmoid(X beta)) draws for the logistic one.
pub fn gen_response(
    x: ArrayView2<f64>,
    truth: &GroundTruth,
    family: GlmFamily,
    seed: u64,
) -> Array1<f64> {
    let n = x.nrows();
    let mut rng = seeded_rng(seed);
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut eta = 0.0;
        for &j in &truth.h1_indices {
            eta += x[[i, j]] * truth.beta[j];
        }
        y[i] = match family {
            GlmFamily::Linear => eta + rng.sample::<f64, _>(StandardNormal),
            GlmFamily::Logistic => {
                let pr = 1.0 / (1.0 + (-eta).exp());
                if rng.random::<f64>() < pr {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
    y
}

/// Realized false discovery proportion and power of a selected set.
pub fn evaluate_fdp_power(selected: &[usize], truth: &GroundTruth) -> Result<(f64, f64), SimError> {
    let p = truth.beta.len();
    let mut is_h1 = vec![false; p];
    for &j in &truth.h1_indices {
        is_h1[j] = true;
    }
    let mut true_pos = 0usize;
    let mut false_pos = 0usize;
    for &j in selected {
        if j >= p {
            return Err(SimError::IndexOutOfRange(j, p));
        }
        if is_h1[j] {
            true_pos += 1;
        } else {
            false_pos += 1;
        }
    }
    let fdp = false_pos as f64 / selected.len().max(1) as f64;
    let power = true_pos as f64 / truth.h1_indices.len().max(1) as f64;
    Ok((fdp, power))
}

/// Which selection rule a simulation run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bgm,
    SymmetricBaseline,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Bgm => "bgm",
            Method::SymmetricBaseline => "baseline",
        }
    }
}

/// One experiment definition. Presets mirror the common linear/logistic
/// settings at paper scale and at a desk scale that runs in minutes.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub family: GlmFamily,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub delta: f64,
    pub rho: f64,
    pub q: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub kappa_grid: Vec<f64>,
    pub lambda_rule: LambdaRule,
}

fn default_kappa_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64).collect()
}

impl SimScenario {
    pub fn linear_desk(master_seed: u64) -> Self {
        SimScenario {
            family: GlmFamily::Linear,
            n: 300,
            p: 300,
            s: 30,
            delta: 3.0,
            rho: 0.5,
            q: 0.1,
            replicates: 30,
            master_seed,
            kappa_grid: default_kappa_grid(),
            lambda_rule: LambdaRule::cross_validated(0),
        }
    }

    pub fn linear_paper(master_seed: u64) -> Self {
        SimScenario {
            n: 400,
            p: 1000,
            s: 50,
            replicates: 50,
            ..Self::linear_desk(master_seed)
        }
    }

    pub fn logistic_desk(master_seed: u64) -> Self {
        SimScenario {
            family: GlmFamily::Logistic,
            n: 400,
            p: 200,
            s: 10,
            delta: 9.0,
            rho: 0.2,
            q: 0.1,
            replicates: 30,
            master_seed,
            kappa_grid: default_kappa_grid(),
            lambda_rule: LambdaRule::cross_validated(0),
        }
    }

    pub fn logistic_paper(master_seed: u64) -> Self {
        SimScenario {
            n: 600,
            p: 1000,
            s: 20,
            replicates: 100,
            ..Self::logistic_desk(master_seed)
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        BlockToeplitzSpec {
            p: self.p,
            rho: self.rho,
        }
        .validate()?;
        if self.s > self.p {
            return Err(SimError::InvalidSpec(format!(
                "s={} exceeds p={}",
                self.s, self.p
            )));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(SimError::InvalidSpec(format!("q={} not in (0,1)", self.q)));
        }
        if self.n < 2 {
            return Err(SimError::InvalidSpec(format!("n={} too small", self.n)));
        }
        Ok(())
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub replicate_id: usize,
    pub selected: Vec<usize>,
    pub fdp: f64,
    pub power: f64,
    pub tau: f64,
    pub kappa_max: f64,
    /// Seconds spent in this replicate; excluded from determinism contracts.
    pub wall_time: f64,
}

/// Mean/sd summary over completed replicates. `defined` is false when no
/// replicate completed.
#[derive(Debug, Clone, Copy)]
pub struct SimSummary {
    pub mean_fdp: f64,
    pub sd_fdp: f64,
    pub mean_power: f64,
    pub sd_power: f64,
    pub completed: usize,
    pub failed: usize,
    pub defined: bool,
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub outcomes: Vec<ReplicateOutcome>,
    pub failures: Vec<(usize, String)>,
    pub summary: SimSummary,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, var.sqrt())
}

fn summarize(outcomes: &[ReplicateOutcome], failed: usize) -> SimSummary {
    let fdps: Vec<f64> = outcomes.iter().map(|o| o.fdp).collect();
    let powers: Vec<f64> = outcomes.iter().map(|o| o.power).collect();
    let (mean_fdp, sd_fdp) = mean_sd(&fdps);
    let (mean_power, sd_power) = mean_sd(&powers);
    SimSummary {
        mean_fdp,
        sd_fdp,
        mean_power,
        sd_power,
        completed: outcomes.len(),
        failed,
        defined: !outcomes.is_empty(),
    }
}

/// Run one replicate of a scenario against a prefactored covariance.
fn run_one(
    scenario: &SimScenario,
    method: Method,
    chol: &Array2<f64>,
    replicate_id: usize,
) -> Result<ReplicateOutcome, String> {
    let start = std::time::Instant::now();
    let rep_seed = derive_seed(scenario.master_seed, &[TAG_REPLICATE, replicate_id as u64]);
    let x_raw = sample_mvn_factored(chol, scenario.n, derive_seed(rep_seed, &[TAG_COVARIATES]));
    let truth = match scenario.family {
        GlmFamily::Linear => gen_beta_linear(
            scenario.p,
            scenario.s,
            scenario.delta,
            scenario.n,
            derive_seed(rep_seed, &[TAG_SIGNALS]),
        ),
        GlmFamily::Logistic => gen_beta_logistic(
            scenario.p,
            scenario.s,
            scenario.delta,
            scenario.n,
            derive_seed(rep_seed, &[TAG_SIGNALS]),
        ),
    }
    .map_err(|e| e.to_string())?;
    let y = gen_response(
        x_raw.view(),
        &truth,
        scenario.family,
        derive_seed(rep_seed, &[TAG_RESPONSE]),
    );
    let design = standardize_columns(x_raw.view()).map_err(|e| e.to_string())?;
    let mut rule = scenario.lambda_rule.clone();
    rule.seed = derive_seed(rep_seed, &[TAG_FOLDS]);
    let mirror_seed = derive_seed(rep_seed, &[TAG_MIRRORS]);
    let selection: BgmSelection = match method {
        Method::Bgm => self_guiding_select(
            &design,
            y.view(),
            scenario.family,
            &scenario.kappa_grid,
            scenario.q,
            mirror_seed,
            &rule,
        ),
        Method::SymmetricBaseline => symmetric_baseline_select(
            &design,
            y.view(),
            scenario.family,
            scenario.q,
            mirror_seed,
            &rule,
        ),
    }
    .map_err(|e| e.to_string())?;
    let (fdp, power) =
        evaluate_fdp_power(&selection.final_selected, &truth).map_err(|e| e.to_string())?;
    let tau = selection.per_kappa[selection
        .per_kappa
        .iter()
        .position(|r| r.kappa == selection.kappa_max)
        .unwrap_or(0)]
    .tau;
    Ok(ReplicateOutcome {
        replicate_id,
        selected: selection.final_selected,
        fdp,
        power,
        tau,
        kappa_max: selection.kappa_max,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Execute every replicate of a scenario. Replicates draw from isolated
/// substreams keyed by (master_seed, replicate_id), so each outcome is
/// unchanged by the presence or order of the others; failures are recorded
/// and excluded from the summary.
pub fn run_replicates(scenario: &SimScenario, method: Method) -> Result<SimRun, SimError> {
    scenario.validate()?;
    let cov = build_block_toeplitz(&BlockToeplitzSpec {
        p: scenario.p,
        rho: scenario.rho,
    })?;
    let chol = psd_factor(cov.view())?;
    let results: Vec<Result<ReplicateOutcome, String>> = (0..scenario.replicates)
        .into_par_iter()
        .map(|rid| run_one(scenario, method, &chol, rid))
        .collect();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (rid, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(msg) => failures.push((rid, msg)),
        }
    }
    let summary = summarize(&outcomes, failures.len());
    Ok(SimRun {
        outcomes,
        failures,
        summary,
    })
}

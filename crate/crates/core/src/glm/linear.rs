//! L1-penalized least squares via cyclic coordinate descent.
//!
//! Minimizes (1/2n) * ||y - b0 - X b||^2 + lambda * ||b||_1 with an
//! unpenalized intercept. Full sweeps alternate with sweeps restricted to
//! the active set; convergence is declared only after a full sweep over a
//! freshly recomputed residual moves no coordinate by more than the
//! tolerance.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::{soft_threshold, GlmError, LassoFit};

pub(crate) const LINEAR_MAX_SWEEPS: usize = 10_000;
pub(crate) const LINEAR_TOL: f64 = 1e-7;

/// Design matrix copied into column-major storage so coordinate updates
/// stream over contiguous memory.
pub(crate) struct ColMajor {
    data: Vec<f64>,
    pub n: usize,
    pub p: usize,
    /// (1/n) * sum_i x_ij^2 per column.
    pub col_sq: Vec<f64>,
}

impl ColMajor {
    pub fn new(x: ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let p = x.ncols();
        let nf = n as f64;
        let mut data = vec![0.0; n * p];
        let mut col_sq = vec![0.0; p];
        for j in 0..p {
            let dst = &mut data[j * n..(j + 1) * n];
            let mut ssq = 0.0;
            for (d, v) in dst.iter_mut().zip(x.column(j).iter()) {
                *d = *v;
                ssq += v * v;
            }
            col_sq[j] = ssq / nf;
        }
        ColMajor { data, n, p, col_sq }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn compute_residual(cm: &ColMajor, y: &[f64], b: &ArrayView1<f64>, b0: f64, r: &mut [f64]) {
    for (ri, yi) in r.iter_mut().zip(y) {
        *ri = yi - b0;
    }
    for j in 0..cm.p {
        if b[j] != 0.0 {
            axpy(-b[j], cm.col(j), r);
        }
    }
}

pub(crate) fn penalized_rss(r: &[f64], b: &Array1<f64>, lambda: f64) -> f64 {
    let n = r.len() as f64;
    let rss: f64 = r.iter().map(|v| v * v).sum();
    0.5 * rss / n + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

/// One pass over the intercept plus the given coordinates; returns the
/// largest absolute coefficient change.
fn sweep(
    cm: &ColMajor,
    lambda: f64,
    subset: Option<&[usize]>,
    b: &mut Array1<f64>,
    b0: &mut f64,
    r: &mut [f64],
) -> f64 {
    let nf = cm.n as f64;
    let mut dmax: f64 = 0.0;
    let d0 = r.iter().sum::<f64>() / nf;
    if d0 != 0.0 {
        *b0 += d0;
        for ri in r.iter_mut() {
            *ri -= d0;
        }
        dmax = d0.abs();
    }
    let mut update = |j: usize, b: &mut Array1<f64>, r: &mut [f64]| {
        let sj = cm.col_sq[j];
        let col = cm.col(j);
        if sj <= 1e-300 {
            if b[j] != 0.0 {
                axpy(b[j], col, r);
                b[j] = 0.0;
            }
            return;
        }
        let rho = dot(col, r) / nf + sj * b[j];
        let bn = soft_threshold(rho, lambda) / sj;
        let d = bn - b[j];
        if d != 0.0 {
            axpy(-d, col, r);
            b[j] = bn;
            dmax = dmax.max(d.abs());
        }
    };
    match subset {
        Some(idx) => {
            for &j in idx {
                update(j, b, r);
            }
        }
        None => {
            for j in 0..cm.p {
                update(j, b, r);
            }
        }
    }
    dmax
}

/// Coordinate descent driver shared by the solvers. Returns (sweeps,
/// converged); `b`/`b0` are updated in place. When `trace` is given the
/// penalized objective after every sweep is appended to it.
pub(crate) fn linear_cd(
    cm: &ColMajor,
    y: &[f64],
    lambda: f64,
    b: &mut Array1<f64>,
    b0: &mut f64,
    max_sweeps: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> (usize, bool) {
    let mut r = vec![0.0; cm.n];
    compute_residual(cm, y, &b.view(), *b0, &mut r);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let d = sweep(cm, lambda, None, b, b0, &mut r);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(penalized_rss(&r, b, lambda));
        }
        if d < tol {
            // confirm against an exactly recomputed residual
            compute_residual(cm, y, &b.view(), *b0, &mut r);
            if sweeps >= max_sweeps {
                break;
            }
            sweeps += 1;
            let d2 = sweep(cm, lambda, None, b, b0, &mut r);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(penalized_rss(&r, b, lambda));
            }
            if d2 < tol {
                converged = true;
                break;
            }
            continue;
        }
        // iterate on the current support before the next full sweep
        let active: Vec<usize> = (0..cm.p).filter(|&j| b[j] != 0.0).collect();
        while sweeps < max_sweeps {
            sweeps += 1;
            let da = sweep(cm, lambda, Some(&active), b, b0, &mut r);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(penalized_rss(&r, b, lambda));
            }
            if da < tol {
                break;
            }
        }
    }
    (sweeps, converged)
}

/// Fit the L1-penalized linear model. `warm_start` supplies initial
/// coefficients and intercept, typically from a neighboring penalty level
/// or a related design.
pub fn lasso_linear(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
    warm_start: Option<(ArrayView1<f64>, f64)>,
) -> Result<LassoFit, GlmError> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n || n == 0 || p == 0 {
        return Err(GlmError::DimensionMismatch(format!(
            "design {n}x{p} with response length {}",
            y.len()
        )));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(GlmError::InvalidLambda(lambda));
    }
    let cm = ColMajor::new(x);
    let yv: Vec<f64> = y.iter().cloned().collect();
    let (mut b, mut b0) = match warm_start {
        Some((w, w0)) => {
            if w.len() != p {
                return Err(GlmError::DimensionMismatch(format!(
                    "warm start length {} for {p} columns",
                    w.len()
                )));
            }
            (w.to_owned(), w0)
        }
        None => (
            Array1::<f64>::zeros(p),
            yv.iter().sum::<f64>() / n as f64,
        ),
    };
    let (sweeps, converged) = linear_cd(
        &cm,
        &yv,
        lambda,
        &mut b,
        &mut b0,
        LINEAR_MAX_SWEEPS,
        LINEAR_TOL,
        None,
    );
    let mut r = vec![0.0; n];
    compute_residual(&cm, &yv, &b.view(), b0, &mut r);
    let objective = penalized_rss(&r, &b, lambda);
    Ok(LassoFit {
        coefficients: b,
        intercept: b0,
        lambda,
        iterations: sweeps,
        converged,
        separated: false,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::{kkt_max_violation, GlmFamily};
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn randn_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::seeded_rng(seed);
        Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
    }

    fn randn_vec(n: usize, seed: u64) -> Array1<f64> {
        let mut rng = crate::rng::seeded_rng(seed);
        Array1::from_shape_fn(n, |_| rng.sample(StandardNormal))
    }

    /// Mean-center columns, Gram-Schmidt, then scale by sqrt(n) so that
    /// X_j' X_k / n = delta_jk exactly (up to rounding).
    fn orthonormal_design(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut x = randn_matrix(n, p, seed);
        let nf = n as f64;
        for j in 0..p {
            let mean = x.column(j).sum() / nf;
            x.column_mut(j).mapv_inplace(|v| v - mean);
        }
        for j in 0..p {
            for k in 0..j {
                let proj = x.column(j).dot(&x.column(k));
                let ck = x.column(k).to_owned();
                x.column_mut(j).zip_mut_with(&ck, |a, b| *a -= proj * b);
            }
            let norm = x.column(j).dot(&x.column(j)).sqrt();
            x.column_mut(j).mapv_inplace(|v| v / norm * nf.sqrt());
        }
        x
    }

    /// Least squares with intercept by normal equations (test oracle).
    fn ols_oracle(x: &Array2<f64>, y: &Array1<f64>) -> (Array1<f64>, f64) {
        let n = x.nrows();
        let p = x.ncols();
        let m = p + 1;
        // A = [1 X]^T [1 X], rhs = [1 X]^T y
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        let aug = |i: usize, c: usize| -> f64 {
            if c == 0 {
                1.0
            } else {
                x[[i, c - 1]]
            }
        };
        for r in 0..m {
            for c in 0..m {
                a[r][c] = (0..n).map(|i| aug(i, r) * aug(i, c)).sum();
            }
            rhs[r] = (0..n).map(|i| aug(i, r) * y[i]).sum();
        }
        // Gaussian elimination with partial pivoting
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            rhs.swap(col, piv);
            let d = a[col][col];
            for r in (col + 1)..m {
                let f = a[r][col] / d;
                for c in col..m {
                    a[r][c] -= f * a[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
        let mut sol = vec![0.0; m];
        for r in (0..m).rev() {
            let mut v = rhs[r];
            for c in (r + 1)..m {
                v -= a[r][c] * sol[c];
            }
            sol[r] = v / a[r][r];
        }
        (Array1::from_iter(sol[1..].iter().cloned()), sol[0])
    }

    #[test]
    fn orthonormal_design_matches_soft_threshold_oracle() {
        let n = 200;
        let p = 8;
        let x = orthonormal_design(n, p, 11);
        let y = randn_vec(n, 12) * 1.5;
        let lambda = 0.08;
        let fit = lasso_linear(x.view(), y.view(), lambda, None).unwrap();
        assert!(fit.converged);
        let nf = n as f64;
        let ybar = y.sum() / nf;
        assert!((fit.intercept - ybar).abs() < 1e-8);
        for j in 0..p {
            let z = x.column(j).dot(&y) / nf;
            let want = soft_threshold(z, lambda);
            assert!(
                (fit.coefficients[j] - want).abs() < 1e-6,
                "coef {j}: got {} want {want}",
                fit.coefficients[j]
            );
        }
    }

    #[test]
    fn full_shrinkage_above_lambda_max() {
        let n = 120;
        let x = randn_matrix(n, 6, 21);
        let y = randn_vec(n, 22);
        let nf = n as f64;
        let ybar = y.sum() / nf;
        let lmax = (0..6)
            .map(|j| (x.column(j).dot(&y) - ybar * x.column(j).sum()).abs() / nf)
            .fold(0.0f64, f64::max);
        let fit = lasso_linear(x.view(), y.view(), lmax * 1.0001, None).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients.iter().all(|&b| b == 0.0));
        assert!((fit.intercept - ybar).abs() < 1e-9);
    }

    #[test]
    fn unpenalized_fit_matches_least_squares() {
        let n = 60;
        let p = 5;
        let x = randn_matrix(n, p, 31);
        let mut y = randn_vec(n, 32);
        for i in 0..n {
            y[i] += 1.0 + 2.0 * x[[i, 0]] - 0.7 * x[[i, 3]];
        }
        let fit = lasso_linear(x.view(), y.view(), 0.0, None).unwrap();
        assert!(fit.converged);
        let (coef, b0) = ols_oracle(&x, &y);
        assert!((fit.intercept - b0).abs() < 1e-6);
        for j in 0..p {
            assert!(
                (fit.coefficients[j] - coef[j]).abs() < 1e-6,
                "coef {j}: cd {} ols {}",
                fit.coefficients[j],
                coef[j]
            );
        }
    }

    #[test]
    fn kkt_conditions_hold_on_random_instances() {
        for seed in 0..8u64 {
            let n = 80;
            let p = 30;
            let x = randn_matrix(n, p, 100 + seed);
            let mut y = randn_vec(n, 200 + seed);
            for i in 0..n {
                y[i] += 0.9 * x[[i, 1]] - 1.4 * x[[i, 5]];
            }
            let lambda = 0.05 + 0.02 * seed as f64;
            let fit = lasso_linear(x.view(), y.view(), lambda, None).unwrap();
            assert!(fit.converged);
            let viol = kkt_max_violation(x.view(), y.view(), GlmFamily::Linear, &fit);
            assert!(viol <= 1e-6, "seed {seed}: KKT violation {viol}");
        }
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let n = 100;
        let p = 25;
        let x = randn_matrix(n, p, 41);
        let mut y = randn_vec(n, 42);
        for i in 0..n {
            y[i] += 1.2 * x[[i, 2]];
        }
        let cold = lasso_linear(x.view(), y.view(), 0.1, None).unwrap();
        // warm start from a deliberately different penalty level
        let other = lasso_linear(x.view(), y.view(), 0.4, None).unwrap();
        let warm = lasso_linear(
            x.view(),
            y.view(),
            0.1,
            Some((other.coefficients.view(), other.intercept)),
        )
        .unwrap();
        for j in 0..p {
            assert!(
                (cold.coefficients[j] - warm.coefficients[j]).abs() < 1e-5,
                "coef {j} differs: {} vs {}",
                cold.coefficients[j],
                warm.coefficients[j]
            );
        }
        assert!((cold.intercept - warm.intercept).abs() < 1e-5);
    }

    #[test]
    fn identical_inputs_give_bitwise_identical_fits() {
        let x = randn_matrix(50, 10, 51);
        let y = randn_vec(50, 52);
        let a = lasso_linear(x.view(), y.view(), 0.07, None).unwrap();
        let b = lasso_linear(x.view(), y.view(), 0.07, None).unwrap();
        assert_eq!(a.intercept.to_bits(), b.intercept.to_bits());
        for j in 0..10 {
            assert_eq!(a.coefficients[j].to_bits(), b.coefficients[j].to_bits());
        }
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn objective_never_increases_across_sweeps() {
        let x = randn_matrix(70, 20, 61);
        let mut y = randn_vec(70, 62);
        for i in 0..70 {
            y[i] += 0.8 * x[[i, 0]] - 0.5 * x[[i, 7]];
        }
        let cm = ColMajor::new(x.view());
        let yv: Vec<f64> = y.iter().cloned().collect();
        let mut b = Array1::<f64>::zeros(20);
        let mut b0 = 0.0;
        let mut trace = Vec::new();
        linear_cd(
            &cm,
            &yv,
            0.05,
            &mut b,
            &mut b0,
            LINEAR_MAX_SWEEPS,
            LINEAR_TOL,
            Some(&mut trace),
        );
        assert!(trace.len() >= 2);
        for w in trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0),
                "objective increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = randn_matrix(10, 3, 71);
        let y = randn_vec(9, 72);
        assert!(matches!(
            lasso_linear(x.view(), y.view(), 0.1, None),
            Err(GlmError::DimensionMismatch(_))
        ));
        let y = randn_vec(10, 73);
        assert!(matches!(
            lasso_linear(x.view(), y.view(), -0.1, None),
            Err(GlmError::InvalidLambda(_))
        ));
        assert!(matches!(
            lasso_linear(x.view(), y.view(), f64::NAN, None),
            Err(GlmError::InvalidLambda(_))
        ));
    }
}

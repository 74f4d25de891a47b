//! Penalty selection: fixed values or K-fold cross-validation over a
//! log-spaced grid anchored at lambda_max.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;

use super::{
    lasso_linear, lasso_logistic, sigmoid, GlmError, GlmFamily, LambdaMode, LambdaRule,
    StandardizedDesign,
};
use crate::rng::seeded_rng;

/// Smallest penalty that forces every slope to zero: max_j |X_j'(y - ybar)| / n.
pub(crate) fn lambda_max(x: ndarray::ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
    let n = x.nrows() as f64;
    let ybar = y.sum() / n;
    let mut m = 0.0f64;
    for j in 0..x.ncols() {
        let g: f64 = x
            .column(j)
            .iter()
            .zip(y.iter())
            .map(|(xi, yi)| xi * (yi - ybar))
            .sum::<f64>()
            / n;
        m = m.max(g.abs());
    }
    m
}

/// Resolve a `LambdaRule` to a concrete penalty level. Fixed rules pass
/// through; cross-validation minimizes pooled held-out deviance over a
/// descending log grid, breaking ties toward the larger (more regularized)
/// penalty. Fold assignment is a seeded shuffle, so identical seeds give
/// identical folds and identical selections.
pub fn select_lambda(
    design: &StandardizedDesign,
    response: ArrayView1<f64>,
    family: GlmFamily,
    rule: &LambdaRule,
) -> Result<f64, GlmError> {
    rule.validate()?;
    let n = design.n();
    if response.len() != n {
        return Err(GlmError::DimensionMismatch(format!(
            "response length {} for {n} rows",
            response.len()
        )));
    }
    let (folds, grid_size, grid_ratio) = match rule.mode {
        LambdaMode::Fixed(v) => return Ok(v),
        LambdaMode::CrossValidated {
            folds,
            grid_size,
            grid_ratio,
        } => (folds, grid_size, grid_ratio),
    };
    if folds > n {
        return Err(GlmError::InvalidLambdaRule(format!(
            "{folds} folds for {n} observations"
        )));
    }

    let x = design.values();
    let p = design.p();
    let lmax = lambda_max(x, response);
    if lmax <= 0.0 {
        return Ok(0.0);
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| lmax * grid_ratio.powf(k as f64 / (grid_size - 1) as f64))
        .collect();

    // seeded shuffle, then round-robin fold labels
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(rule.seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let mut deviance = vec![0.0f64; grid_size];
    for f in 0..folds {
        let train_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let val_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let mut xt = Array2::<f64>::zeros((train_rows.len(), p));
        let mut yt = Array1::<f64>::zeros(train_rows.len());
        for (r, &i) in train_rows.iter().enumerate() {
            xt.row_mut(r).assign(&x.row(i));
            yt[r] = response[i];
        }
        let mut warm: Option<(Array1<f64>, f64)> = None;
        for (k, &lam) in grid.iter().enumerate() {
            let ws = warm.as_ref().map(|(c, b0)| (c.view(), *b0));
            let fit = match family {
                GlmFamily::Linear => lasso_linear(xt.view(), yt.view(), lam, ws)?,
                GlmFamily::Logistic => lasso_logistic(xt.view(), yt.view(), lam, ws)?,
            };
            for &i in &val_rows {
                let eta = fit.intercept + x.row(i).dot(&fit.coefficients);
                deviance[k] += match family {
                    GlmFamily::Linear => {
                        let r = response[i] - eta;
                        r * r
                    }
                    GlmFamily::Logistic => {
                        let pi = sigmoid(eta).clamp(1e-12, 1.0 - 1e-12);
                        -2.0 * (response[i] * pi.ln() + (1.0 - response[i]) * (1.0 - pi).ln())
                    }
                };
            }
            warm = Some((fit.coefficients, fit.intercept));
        }
    }

    // strict improvement required, so ties resolve to the larger penalty
    let mut best = 0usize;
    for k in 1..grid_size {
        if deviance[k] < deviance[best] {
            best = k;
        }
    }
    Ok(grid[best])
}

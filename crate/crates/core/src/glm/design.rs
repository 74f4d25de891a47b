//! Column standardization with retained back-transform metadata.

use ndarray::{Array1, Array2, ArrayView2};

use super::GlmError;

/// A design matrix whose columns have been centered to mean zero and scaled
/// to unit population standard deviation. The original column means and
/// scales are kept so coefficients can be mapped back to the raw scale.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    values: Array2<f64>,
    column_means: Array1<f64>,
    column_scales: Array1<f64>,
}

impl StandardizedDesign {
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_means(&self) -> &Array1<f64> {
        &self.column_means
    }

    pub fn column_scales(&self) -> &Array1<f64> {
        &self.column_scales
    }

    /// Map a coefficient vector (and intercept) fitted on the standardized
    /// matrix back to the raw covariate scale.
    pub fn destandardize(&self, coefficients: &Array1<f64>, intercept: f64) -> (Array1<f64>, f64) {
        let p = self.p();
        assert_eq!(coefficients.len(), p, "coefficient length mismatch");
        let mut raw = Array1::<f64>::zeros(p);
        let mut b0 = intercept;
        for j in 0..p {
            raw[j] = coefficients[j] / self.column_scales[j];
            b0 -= coefficients[j] * self.column_means[j] / self.column_scales[j];
        }
        (raw, b0)
    }
}

/// Center each column to mean zero and scale it by its population standard
/// deviation, sqrt(sum((x - mean)^2) / n). Columns with (numerically) zero
/// variance are rejected.
pub fn standardize_columns(raw: ArrayView2<f64>) -> Result<StandardizedDesign, GlmError> {
    let n = raw.nrows();
    let p = raw.ncols();
    if n < 2 || p == 0 {
        return Err(GlmError::DimensionMismatch(format!(
            "need at least 2 rows and 1 column, got {n}x{p}"
        )));
    }
    let nf = n as f64;
    let mut values = raw.to_owned();
    let mut means = Array1::<f64>::zeros(p);
    let mut scales = Array1::<f64>::zeros(p);
    for j in 0..p {
        let mut col = values.column_mut(j);
        let mean = col.sum() / nf;
        let mut ssq = 0.0;
        for v in col.iter() {
            let d = v - mean;
            ssq += d * d;
        }
        let scale = (ssq / nf).sqrt();
        if scale < 1e-12 {
            return Err(GlmError::ConstantColumn(j));
        }
        col.mapv_inplace(|v| (v - mean) / scale);
        means[j] = mean;
        scales[j] = scale;
    }
    Ok(StandardizedDesign {
        values,
        column_means: means,
        column_scales: scales,
    })
}

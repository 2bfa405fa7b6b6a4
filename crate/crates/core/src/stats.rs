//! Gaussian sufficient statistics and the pairwise BIC measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Count, sum and summed outer products of a window of feature vectors.
///
/// Statistics of disjoint windows merge by elementwise addition, so any
/// window union can be modelled without revisiting frames.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub n: usize,
    pub sum: Vec<f64>,
    /// Row-major `d x d`.
    pub sumsq: Vec<f64>,
}

impl GaussianStats {
    pub fn empty(dim: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; dim],
            sumsq: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        self.n += 1;
        for i in 0..d {
            self.sum[i] += x[i];
            let row = &mut self.sumsq[i * d..(i + 1) * d];
            let xi = x[i];
            for (s, &xj) in row.iter_mut().zip(x) {
                *s += xi * xj;
            }
        }
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut s = Self::empty(dim);
        for r in rows {
            s.push(r);
        }
        s
    }

    pub fn merge(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Self {
            n: self.n + other.n,
            sum: self.sum.iter().zip(&other.sum).map(|(a, b)| a + b).collect(),
            sumsq: self.sumsq.iter().zip(&other.sumsq).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Maximum-likelihood covariance `sumsq / n - mean mean^T`, symmetrized.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.n as f64;
        let mean = self.mean();
        let mut cov = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let upper = self.sumsq[i * d + j] / n - mean[i] * mean[j];
                let lower = self.sumsq[j * d + i] / n - mean[j] * mean[i];
                let v = 0.5 * (upper + lower);
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        cov
    }

    /// Covariance plus `eps * trace / d` on the diagonal. A zero-trace
    /// covariance (all vectors identical) gets `eps` itself, so it stays
    /// positive definite for any `eps > 0`.
    pub fn regularized_covariance(&self, epsilon: f64) -> Vec<f64> {
        let d = self.dim();
        let mut cov = self.covariance();
        let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
        let ridge = if trace > 0.0 {
            epsilon * trace / d as f64
        } else {
            epsilon
        };
        for i in 0..d {
            cov[i * d + i] += ridge;
        }
        cov
    }
}

/// Statistics of frames `[begin, end)`.
pub fn accumulate_stats(features: &FeatureMatrix, begin: usize, end: usize) -> Result<GaussianStats> {
    if begin >= end || end > features.n_frames() {
        return Err(Error::EmptyRange { begin, end });
    }
    Ok(GaussianStats::from_rows(
        features.dim(),
        (begin..end).map(|k| features.row(k)),
    ))
}

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
pub fn log_det_spd(matrix: &[f64], d: usize) -> Result<f64> {
    assert_eq!(matrix.len(), d * d);
    let mut l = vec![0.0; d * d];
    let mut log_det = 0.0;
    for j in 0..d {
        let mut diag = matrix[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !diag.is_finite() || diag <= 0.0 {
            return Err(Error::DegenerateModel(format!(
                "covariance not positive definite (pivot {j} = {diag:e})"
            )));
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        log_det += diag.ln();
        for i in j + 1..d {
            let mut v = matrix[i * d + j];
            for k in 0..j {
                v -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = v / ljj;
        }
    }
    Ok(log_det)
}

/// Regularization and penalty settings for [`bic_similarity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicParams {
    /// Relative ridge added to each covariance, scaled by its mean variance.
    pub epsilon: f64,
    /// Weight of the model-complexity penalty; 0 gives the bare
    /// log-likelihood-ratio form.
    pub penalty_lambda: f64,
}

impl Default for BicParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            penalty_lambda: 0.0,
        }
    }
}

impl BicParams {
    pub fn unpenalized(epsilon: f64) -> Self {
        Self {
            epsilon,
            penalty_lambda: 0.0,
        }
    }
}

/// Complexity term `(d + d(d+1)/2) / 2 * ln n` of a full-covariance Gaussian.
pub fn bic_penalty(dim: usize, n: usize) -> f64 {
    let d = dim as f64;
    0.5 * (d + d * (d + 1.0) / 2.0) * (n as f64).ln()
}

/// `N_W/2 log|S_W| - N_a/2 log|S_a| - N_b/2 log|S_b|`, minus
/// `penalty_lambda * bic_penalty(d, N_W)`.
///
/// Larger values mean the two windows are less alike. The result is exactly
/// symmetric in its arguments.
pub fn bic_similarity(a: &GaussianStats, b: &GaussianStats, params: BicParams) -> Result<f64> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::DegenerateModel(format!(
            "windows of {} and {} vectors; need at least 2 each",
            a.n, b.n
        )));
    }
    let d = a.dim();
    let pooled = a.merge(b);
    let ld = |s: &GaussianStats| log_det_spd(&s.regularized_covariance(params.epsilon), d);
    let whole = pooled.n as f64 * ld(&pooled)?;
    let parts = a.n as f64 * ld(a)? + b.n as f64 * ld(b)?;
    let mut value = 0.5 * (whole - parts);
    if params.penalty_lambda != 0.0 {
        value -= params.penalty_lambda * bic_penalty(d, pooled.n);
    }
    Ok(value)
}

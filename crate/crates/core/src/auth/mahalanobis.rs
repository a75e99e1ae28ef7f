//! Mahalanobis distance through a Cholesky factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// `cov + lambda * trace(cov) / m * I`. A zero-trace covariance gets the bare
/// `lambda` so the result is still positive definite.
pub fn regularize(cov: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let m = cov.nrows();
    let tr = cov.trace();
    let ridge = if tr > 0.0 {
        lambda * tr / m as f64
    } else {
        lambda
    };
    let mut out = cov.clone();
    for i in 0..m {
        out[(i, i)] += ridge;
    }
    out
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky_factor(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sigma
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

/// Distance given the Cholesky factor `l` of the covariance.
pub fn distance_chol(x: &[f64], mu: &[f64], l: &DMatrix<f64>) -> Result<f64> {
    if x.len() != mu.len() || l.nrows() != x.len() {
        return Err(Error::FeatureDimMismatch {
            expected: l.nrows(),
            got: x.len(),
        });
    }
    let diff = DVector::from_iterator(x.len(), x.iter().zip(mu).map(|(a, b)| a - b));
    let y = l
        .solve_lower_triangular(&diff)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(y.norm())
}

/// `sqrt((x - mu)^T sigma^-1 (x - mu))` without forming the inverse.
pub fn mahalanobis_spd(x: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    distance_chol(x, mu, &cholesky_factor(sigma)?)
}

//! PCA on z-scored features.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, flat, to_matrix, Standardizer};

pub const DEFAULT_VARIANCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub standardizer: Standardizer,
    /// Mean of the standardized training rows.
    pub mean: Vec<f64>,
    /// `d x m`, orthonormal columns sorted by decreasing eigenvalue.
    #[serde(with = "flat")]
    pub components: DMatrix<f64>,
    /// Explained-variance fraction of every eigen-direction (length `d`).
    pub explained: Vec<f64>,
}

impl PcaBasis {
    /// Keeps the fewest components whose cumulative explained variance
    /// reaches `variance`.
    pub fn fit(rows: &[Vec<f64>], variance: f64) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "PCA needs 3 samples, got {}",
                rows.len()
            )));
        }
        let standardizer = Standardizer::fit(rows.iter().map(|r| r.as_slice()));
        let z: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.apply(r)).collect();
        let zm = to_matrix(&z);
        let d = zm.ncols();
        let mean: Vec<f64> = (0..d).map(|j| zm.column(j).mean()).collect();

        let eig = SymmetricEigen::new(covariance(&zm));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = vals.iter().sum();
        let explained: Vec<f64> = if total > 0.0 {
            vals.iter().map(|v| v / total).collect()
        } else {
            vec![0.0; d]
        };

        let mut m = d;
        let mut acc = 0.0;
        for (i, e) in explained.iter().enumerate() {
            acc += e;
            if acc >= variance - 1e-12 {
                m = i + 1;
                break;
            }
        }
        if total <= 0.0 {
            m = 1;
        }

        let mut components = DMatrix::zeros(d, m);
        for (j, &src) in order.iter().take(m).enumerate() {
            let mut v: DVector<f64> = eig.eigenvectors.column(src).into_owned();
            // fix the sign so the largest-magnitude entry is positive
            let (imax, _) = v.iter().enumerate().fold((0, 0.0), |best, (i, x)| {
                if x.abs() > best.1 {
                    (i, x.abs())
                } else {
                    best
                }
            });
            if v[imax] < 0.0 {
                v = -v;
            }
            components.set_column(j, &v);
        }
        Ok(Self {
            standardizer,
            mean,
            components,
            explained,
        })
    }

    pub fn dims(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardizer.apply(x);
        let c = DVector::from_iterator(z.len(), z.iter().zip(&self.mean).map(|(a, b)| a - b));
        (self.components.transpose() * c).iter().copied().collect()
    }

    /// Inverse of [`project`](Self::project) restricted to the kept subspace.
    pub fn reconstruct(&self, y: &[f64]) -> Vec<f64> {
        let z = &self.components * DVector::from_column_slice(y);
        z.iter()
            .zip(&self.mean)
            .zip(self.standardizer.mean.iter().zip(&self.standardizer.std))
            .map(|((v, m), (mu, sd))| (v + m) * sd + mu)
            .collect()
    }
}

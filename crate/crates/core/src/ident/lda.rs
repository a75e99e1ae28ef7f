//! Multiclass Fisher LDA with nearest-centroid decisions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{flat, Standardizer};

pub const DEFAULT_LAMBDA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub standardizer: Standardizer,
    /// `d x r` projection in standardized coordinates.
    #[serde(with = "flat")]
    pub w: DMatrix<f64>,
    /// Class labels in the order of `centroids`.
    pub classes: Vec<usize>,
    /// Projected class means.
    pub centroids: Vec<Vec<f64>>,
}

impl LdaModel {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], lambda: f64) -> Result<Self> {
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InsufficientData(
                "LDA needs at least two classes".into(),
            ));
        }
        let standardizer = Standardizer::fit(rows.iter().map(|r| r.as_slice()));
        let z: Vec<DVector<f64>> = rows
            .iter()
            .map(|r| DVector::from_vec(standardizer.apply(r)))
            .collect();
        let d = standardizer.dims();

        let mut means = vec![DVector::zeros(d); classes.len()];
        let mut counts = vec![0usize; classes.len()];
        for (x, l) in z.iter().zip(labels) {
            let c = classes.binary_search(l).unwrap();
            means[c] += x;
            counts[c] += 1;
        }
        for (m, &n) in means.iter_mut().zip(&counts) {
            *m /= n as f64;
        }
        let overall = z.iter().fold(DVector::zeros(d), |a, x| a + x) / z.len() as f64;

        let mut sw = DMatrix::zeros(d, d);
        for (x, l) in z.iter().zip(labels) {
            let c = classes.binary_search(l).unwrap();
            let e = x - &means[c];
            sw.ger(1.0, &e, &e, 1.0);
        }
        let mut sb = DMatrix::zeros(d, d);
        for (m, &n) in means.iter().zip(&counts) {
            let e = m - &overall;
            sb.ger(n as f64, &e, &e, 1.0);
        }

        let ridge = lambda * sw.trace() / d as f64;
        if !(ridge > 0.0) || !ridge.is_finite() {
            return Err(Error::SingularScatter);
        }
        for i in 0..d {
            sw[(i, i)] += ridge;
        }
        let chol = sw.cholesky().ok_or(Error::SingularScatter)?;
        let l = chol.l();
        // M = L^-1 Sb L^-T is symmetric with the generalized eigenvalues.
        let linv_sb = l
            .solve_lower_triangular(&sb)
            .ok_or(Error::SingularScatter)?;
        let m = l
            .solve_lower_triangular(&linv_sb.transpose())
            .ok_or(Error::SingularScatter)?;
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let r = (classes.len() - 1).min(d);
        let v = DMatrix::from_fn(d, r, |i, j| eig.eigenvectors[(i, order[j])]);
        let w = l
            .transpose()
            .solve_upper_triangular(&v)
            .ok_or(Error::SingularScatter)?;

        let centroids = means
            .iter()
            .map(|m| (w.transpose() * m).iter().copied().collect())
            .collect();
        Ok(Self {
            standardizer,
            w,
            classes,
            centroids,
        })
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let z = DVector::from_vec(self.standardizer.apply(x));
        (self.w.transpose() * z).iter().copied().collect()
    }

    /// Nearest centroid; the score is the negated distance.
    pub fn predict(&self, x: &[f64]) -> (usize, f64) {
        let p = self.project(x);
        let (c, d) = self
            .centroids
            .iter()
            .map(|c| crate::linalg::euclidean(&p, c))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        (self.classes[c], -d)
    }

    /// Column `j` of the projection expressed on raw (unstandardized) inputs.
    pub fn raw_direction(&self, j: usize) -> Vec<f64> {
        self.w
            .column(j)
            .iter()
            .zip(&self.standardizer.std)
            .map(|(w, s)| w / s)
            .collect()
    }
}

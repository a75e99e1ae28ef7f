//! Single-subject enrollment and verification.
//!
//! Per morphology: z-score and PCA, optional grid clustering in the reduced
//! space, then one distance model per cluster with its own threshold.

pub mod augment;
pub mod mahalanobis;
pub mod pca;
pub mod wavecluster;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::MorphologyClass;
use crate::features::FeatureVector;
use crate::linalg::{covariance, euclidean, flat, percentile, to_matrix};

pub use augment::augment_cluster;
pub use mahalanobis::{mahalanobis_spd, regularize};
pub use pca::PcaBasis;
pub use wavecluster::{cluster_count, wavecluster, WaveClusterConfig};

pub const PROFILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthOptions {
    pub metric: Metric,
    /// Split each morphology into grid clusters; otherwise one cluster.
    pub multi_cluster: bool,
    pub pca_variance: f64,
    pub tau_percentile: f64,
    /// Clusters with fewer original members use `max * small_cluster_factor`.
    pub small_cluster_size: usize,
    pub small_cluster_factor: f64,
    pub ridge_lambda: f64,
    pub min_periods: usize,
    pub min_morphology_samples: usize,
    pub wavecluster: WaveClusterConfig,
}

impl Default for AuthOptions {
    fn default() -> Self {
        Self {
            metric: Metric::Mahalanobis,
            multi_cluster: true,
            pca_variance: pca::DEFAULT_VARIANCE,
            tau_percentile: 95.0,
            small_cluster_size: 20,
            small_cluster_factor: 1.1,
            ridge_lambda: mahalanobis::DEFAULT_RIDGE,
            min_periods: 20,
            min_morphology_samples: 3,
            wavecluster: WaveClusterConfig::default(),
        }
    }
}

impl AuthOptions {
    /// Single cluster, Euclidean distance.
    pub fn euclidean() -> Self {
        Self {
            metric: Metric::Euclidean,
            multi_cluster: false,
            ..Self::default()
        }
    }

    /// Single cluster, Mahalanobis distance.
    pub fn mahalanobis_single() -> Self {
        Self {
            multi_cluster: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthCluster {
    /// PCA-space members, augmented points last.
    pub members: Vec<Vec<f64>>,
    pub original_count: usize,
    pub centroid: Vec<f64>,
    /// Regularized covariance.
    #[serde(with = "flat")]
    pub covariance: DMatrix<f64>,
    #[serde(with = "flat")]
    pub chol: DMatrix<f64>,
    pub threshold: f64,
    pub augmented: bool,
}

impl AuthCluster {
    fn build(points: Vec<Vec<f64>>, opts: &AuthOptions) -> Result<Self> {
        let m = points[0].len();
        let original_count = points.len();
        let (members, augmented) = if original_count > m + 1 {
            (points, false)
        } else {
            (augment_cluster(&points, m + 2)?, true)
        };
        let mat = to_matrix(&members);
        let centroid: Vec<f64> = (0..m).map(|j| mat.column(j).mean()).collect();
        let cov = regularize(&covariance(&mat), opts.ridge_lambda);
        let chol = mahalanobis::cholesky_factor(&cov)?;
        let mut c = Self {
            members,
            original_count,
            centroid,
            covariance: cov,
            chol,
            threshold: 0.0,
            augmented,
        };
        let dists = c.members[..original_count]
            .iter()
            .map(|x| c.distance(x, opts.metric))
            .collect::<Result<Vec<f64>>>()?;
        c.threshold = if original_count < opts.small_cluster_size {
            dists.iter().copied().fold(0.0, f64::max) * opts.small_cluster_factor
        } else {
            percentile(&dists, opts.tau_percentile)
        };
        Ok(c)
    }

    pub fn mahalanobis(&self, x: &[f64]) -> Result<f64> {
        mahalanobis::distance_chol(x, &self.centroid, &self.chol)
    }

    pub fn distance(&self, x: &[f64], metric: Metric) -> Result<f64> {
        match metric {
            Metric::Mahalanobis => self.mahalanobis(x),
            Metric::Euclidean => {
                if x.len() != self.centroid.len() {
                    return Err(Error::FeatureDimMismatch {
                        expected: self.centroid.len(),
                        got: x.len(),
                    });
                }
                Ok(euclidean(x, &self.centroid))
            }
        }
    }

    /// Distance over threshold; `<= 1` accepts.
    pub fn ratio(&self, x: &[f64], metric: Metric) -> Result<f64> {
        let d = self.distance(x, metric)?;
        Ok(if self.threshold > 0.0 {
            d / self.threshold
        } else if d <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        })
    }
}

/// Distance of `x` to a cluster under the regularized covariance.
pub fn mahalanobis(x: &[f64], cluster: &AuthCluster) -> Result<f64> {
    cluster.mahalanobis(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphologyProfile {
    pub pca: PcaBasis,
    pub clusters: Vec<AuthCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthProfile {
    pub version: u32,
    pub subject_id: String,
    pub metric: Metric,
    pub morphologies: BTreeMap<MorphologyClass, MorphologyProfile>,
}

pub fn enroll(
    train: &[FeatureVector],
    subject_id: &str,
    opts: &AuthOptions,
) -> Result<AuthProfile> {
    if train.len() < opts.min_periods {
        return Err(Error::InsufficientData(format!(
            "enrollment needs {} periods, got {}",
            opts.min_periods,
            train.len()
        )));
    }
    let mut morphologies = BTreeMap::new();
    for morph in MorphologyClass::ACCEPTED {
        let rows: Vec<Vec<f64>> = train
            .iter()
            .filter(|f| f.morphology == morph)
            .map(|f| f.values.clone())
            .collect();
        if rows.len() < opts.min_morphology_samples.max(3) {
            continue;
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != rows[0].len()) {
            return Err(Error::FeatureDimMismatch {
                expected: rows[0].len(),
                got: bad.len(),
            });
        }
        let pca = PcaBasis::fit(&rows, opts.pca_variance)?;
        let proj: Vec<Vec<f64>> = rows.iter().map(|r| pca.project(r)).collect();
        let labels = if opts.multi_cluster {
            wavecluster(&proj, &opts.wavecluster)?
        } else {
            vec![Some(0); proj.len()]
        };
        let mut groups: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
        for (p, l) in proj.into_iter().zip(labels) {
            if let Some(l) = l {
                groups.entry(l).or_default().push(p);
            }
        }
        // a lone point has no spread to augment from
        let clusters = groups
            .into_values()
            .filter(|g| g.len() >= 2)
            .map(|g| AuthCluster::build(g, opts))
            .collect::<Result<Vec<_>>>()?;
        if !clusters.is_empty() {
            morphologies.insert(morph, MorphologyProfile { pca, clusters });
        }
    }
    if morphologies.is_empty() {
        return Err(Error::InsufficientData(
            "no morphology has enough periods to enroll".into(),
        ));
    }
    Ok(AuthProfile {
        version: PROFILE_VERSION,
        subject_id: subject_id.to_string(),
        metric: opts.metric,
        morphologies,
    })
}

/// `(accept, min distance/threshold ratio)`. Total: morphologies without a
/// profile, or vectors of the wrong width, reject at infinite distance.
pub fn verify(profile: &AuthProfile, fv: &FeatureVector) -> (bool, f64) {
    let Some(mp) = profile.morphologies.get(&fv.morphology) else {
        return (false, f64::INFINITY);
    };
    if fv.dims() != mp.pca.dims() {
        return (false, f64::INFINITY);
    }
    let y = mp.pca.project(&fv.values);
    let best = mp
        .clusters
        .iter()
        .filter_map(|c| c.ratio(&y, profile.metric).ok())
        .fold(f64::INFINITY, f64::min);
    (best <= 1.0, best)
}

impl AuthProfile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.version != PROFILE_VERSION {
            return Err(Error::UnsupportedVersion(p.version));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn cluster_count(&self) -> usize {
        self.morphologies.values().map(|m| m.clusters.len()).sum()
    }
}

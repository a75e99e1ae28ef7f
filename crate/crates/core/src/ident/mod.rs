//! Closed-set identification, one classifier per morphology.

pub mod knn;
pub mod lda;
pub mod nn;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::MorphologyClass;
use crate::features::FeatureVector;

pub use knn::KnnModel;
pub use lda::LdaModel;
pub use nn::{hidden_sizes, NnConfig, NnModel};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentKind {
    Knn,
    Lda,
    Nn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentConfig {
    pub k: usize,
    pub lda_lambda: f64,
    pub nn: NnConfig,
}

impl Default for IdentConfig {
    fn default() -> Self {
        Self {
            k: 3,
            lda_lambda: lda::DEFAULT_LAMBDA,
            nn: NnConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubModel {
    Knn(KnnModel),
    Lda(LdaModel),
    Nn(NnModel),
    /// Only one subject was seen with this morphology.
    Constant(usize),
}

impl SubModel {
    fn predict(&self, x: &[f64]) -> (usize, f64) {
        match self {
            Self::Knn(m) => m.predict(x),
            Self::Lda(m) => m.predict(x),
            Self::Nn(m) => m.predict(x),
            Self::Constant(c) => (*c, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphologyModel {
    pub dims: usize,
    pub model: SubModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentModel {
    pub version: u32,
    pub kind: IdentKind,
    /// Subject ids; sub-models predict indices into this list.
    pub labels: Vec<String>,
    pub models: BTreeMap<MorphologyClass, MorphologyModel>,
}

/// Trains one sub-model for every accepted morphology in `train`.
pub fn train_ident(
    train: &[FeatureVector],
    kind: IdentKind,
    cfg: &IdentConfig,
) -> Result<IdentModel> {
    let mut labels: Vec<String> = train.iter().map(|f| f.subject_id.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "identification needs at least two subjects, got {}",
            labels.len()
        )));
    }

    let mut models = BTreeMap::new();
    for morph in MorphologyClass::ACCEPTED {
        let group: Vec<&FeatureVector> = train.iter().filter(|f| f.morphology == morph).collect();
        if group.is_empty() {
            continue;
        }
        let dims = group[0].dims();
        if let Some(bad) = group.iter().find(|f| f.dims() != dims) {
            return Err(Error::FeatureDimMismatch {
                expected: dims,
                got: bad.dims(),
            });
        }
        let rows: Vec<Vec<f64>> = group.iter().map(|f| f.values.clone()).collect();
        let y: Vec<usize> = group
            .iter()
            .map(|f| labels.binary_search(&f.subject_id).unwrap())
            .collect();
        let mut distinct = y.clone();
        distinct.sort_unstable();
        distinct.dedup();

        let model = if distinct.len() < 2 {
            SubModel::Constant(distinct[0])
        } else {
            match kind {
                IdentKind::Knn => SubModel::Knn(KnnModel::fit(&rows, &y, cfg.k)),
                IdentKind::Lda => SubModel::Lda(LdaModel::fit(&rows, &y, cfg.lda_lambda)?),
                IdentKind::Nn => {
                    let nn_cfg = NnConfig {
                        seed: cfg.nn.seed.wrapping_add(morph as u64),
                        ..cfg.nn
                    };
                    SubModel::Nn(NnModel::fit(&rows, &y, hidden_sizes(morph), &nn_cfg)?)
                }
            }
        };
        models.insert(morph, MorphologyModel { dims, model });
    }
    if models.is_empty() {
        return Err(Error::InsufficientData(
            "no accepted-morphology periods".into(),
        ));
    }
    Ok(IdentModel {
        version: MODEL_VERSION,
        kind,
        labels,
        models,
    })
}

pub fn train_knn(train: &[FeatureVector], k: usize) -> Result<IdentModel> {
    train_ident(
        train,
        IdentKind::Knn,
        &IdentConfig {
            k,
            ..IdentConfig::default()
        },
    )
}

pub fn train_lda(train: &[FeatureVector]) -> Result<IdentModel> {
    train_ident(train, IdentKind::Lda, &IdentConfig::default())
}

pub fn train_nn(train: &[FeatureVector], cfg: &NnConfig) -> Result<IdentModel> {
    train_ident(
        train,
        IdentKind::Nn,
        &IdentConfig {
            nn: *cfg,
            ..IdentConfig::default()
        },
    )
}

/// Routes `fv` to its morphology's classifier and returns the predicted
/// subject with a classifier-specific score.
pub fn identify(model: &IdentModel, fv: &FeatureVector) -> Result<(String, f64)> {
    let sub = model
        .models
        .get(&fv.morphology)
        .ok_or_else(|| Error::UnknownMorphology(fv.morphology.to_string()))?;
    if fv.dims() != sub.dims {
        return Err(Error::FeatureDimMismatch {
            expected: sub.dims,
            got: fv.dims(),
        });
    }
    let (idx, score) = sub.model.predict(&fv.values);
    Ok((model.labels[idx].clone(), score))
}

impl IdentModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(m.version));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

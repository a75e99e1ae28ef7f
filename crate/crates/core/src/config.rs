//! Top-level configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auth::AuthOptions;
use crate::error::{Error, Result};
use crate::eval::BenchConfig;
use crate::ident::IdentConfig;
use crate::segment::SegmentConfig;
use crate::spectral::FilterConfig;

/// Every tunable in one JSON document. Missing keys take their defaults and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub filter: FilterConfig,
    pub segment: SegmentConfig,
    pub ident: IdentConfig,
    pub auth: AuthOptions,
    pub bench: BenchConfig,
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            filter: FilterConfig::default(),
            segment: SegmentConfig::default(),
            ident: IdentConfig::default(),
            auth: AuthOptions::default(),
            bench: BenchConfig::default(),
            data_dir: None,
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.bench.train_fraction > 0.0 && self.bench.train_fraction < 1.0) {
            return bad("bench.train_fraction must lie in (0, 1)");
        }
        if self.ident.k == 0 {
            return bad("ident.k must be positive");
        }
        if !(self.auth.pca_variance > 0.0 && self.auth.pca_variance <= 1.0) {
            return bad("auth.pca_variance must lie in (0, 1]");
        }
        if !(0.0..=100.0).contains(&self.auth.tau_percentile) {
            return bad("auth.tau_percentile must lie in [0, 100]");
        }
        if self.segment.period_len < 4 {
            return bad("segment.period_len must be at least 4");
        }
        Ok(())
    }

    /// Benchmark settings with the shared classifier and enrollment options,
    /// the NN seeded from `seed`.
    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            ident: self.ident_config(),
            auth: self.auth,
            ..self.bench.clone()
        }
    }

    pub fn ident_config(&self) -> IdentConfig {
        let mut ident = self.ident;
        ident.nn.seed = self.seed;
        ident
    }
}

//! PPG biometrics.
//!
//! Signals are band-passed around each subject's own heart rate, cut into
//! valley-to-valley periods, classified by the peak/valley count of their
//! second derivative, and turned into fiducial feature vectors. Those feed a
//! closed-set identifier (K-NN, LDA, or an autoencoder-pretrained network)
//! and a single-subject authenticator (PCA, wavelet-grid clustering and
//! per-cluster Mahalanobis thresholds). [`eval`] runs the benchmark variants.

pub mod auth;
pub mod config;
pub mod cte;
pub mod error;
pub mod eval;
pub mod extrema;
pub mod features;
pub mod ident;
pub mod linalg;
pub mod pipeline;
pub mod segment;
pub mod signal;
pub mod spectral;
pub mod spline;
pub mod synth;

pub use auth::{enroll, verify, AuthOptions, AuthProfile};
pub use config::PipelineConfig;
pub use cte::{cte_variance, CteReport, Trace};
pub use error::{Error, Result};
pub use eval::{bac, build_dataset, run_benchmark, BenchConfig, Dataset, ReportRow, Variant};
pub use extrema::{classify_morphology, detect_extrema, Extrema, MorphologyClass};
pub use features::{extract_features, fiducials_h, FeatureVector, FiducialPoint};
pub use ident::{identify, train_ident, IdentConfig, IdentKind, IdentModel};
pub use pipeline::{process_signal, FilterMode, ProcessedSubject};
pub use segment::{segment_periods, CardiacPeriod, SegmentConfig};
pub use signal::{frames_to_signal, load_signal, PpgSignal, RgbFrame, SignalFormat};
pub use spectral::{
    adaptive_band, butterworth_bandpass, estimate_f1h, harmonic_filter, second_derivative,
    soa_filter, BandSpec, FilterConfig, HarmonicEstimate, WindowPlan,
};
pub use synth::{generate_synthetic, SyntheticSpec};

//! Fixtures shared by the criterion benches.

use ppg_bioid::pipeline::process_signal;
use ppg_bioid::spectral::FilterConfig;
use ppg_bioid::synth::{generate_synthetic, separable_population};
use ppg_bioid::{FeatureVector, FilterMode, PpgSignal, SegmentConfig};

/// Five synthetic recordings of `duration_s` seconds.
pub fn signals(duration_s: f64) -> Vec<PpgSignal> {
    generate_synthetic(&separable_population(duration_s, 7)).expect("preset spec is valid")
}

/// Accepted feature vectors of every subject, harmonic filtering.
pub fn features(duration_s: f64) -> Vec<FeatureVector> {
    signals(duration_s)
        .iter()
        .flat_map(|s| {
            let p = process_signal(
                s,
                FilterMode::Harmonic,
                &FilterConfig::default(),
                &SegmentConfig::default(),
            )
            .expect("synthetic recording processes");
            p.accepted().cloned().collect::<Vec<_>>()
        })
        .collect()
}

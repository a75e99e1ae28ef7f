//! Signal-to-features chain for one subject.

use serde::{Deserialize, Serialize};

use crate::cte::{cte_variance, Trace};
use crate::error::{Error, Result};
use crate::extrema::MorphologyClass;
use crate::features::{extract_features, FeatureVector};
use crate::segment::{segment_periods, CardiacPeriod, SegmentConfig};
use crate::signal::PpgSignal;
use crate::spectral::{estimate_f1h, harmonic_filter, second_derivative, soa_filter, FilterConfig};

/// Which band-pass produces the working signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Fixed 0.5-12.5 Hz: f(t).
    Soa,
    /// Per-window adaptive band: h(t).
    Harmonic,
}

/// What happened to a segmented period.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodOutcome {
    Accepted(FeatureVector),
    /// Second derivative matched none of the accepted morphologies.
    Discarded,
    /// The h(t) part did not show 2 peaks and 3 valleys.
    HMismatch(MorphologyClass),
}

impl PeriodOutcome {
    pub fn features(&self) -> Option<&FeatureVector> {
        match self {
            Self::Accepted(f) => Some(f),
            _ => None,
        }
    }

    pub fn morphology(&self) -> MorphologyClass {
        match self {
            Self::Accepted(f) => f.morphology,
            Self::Discarded => MorphologyClass::Discard,
            Self::HMismatch(m) => *m,
        }
    }
}

/// Filtered signals for one subject.
#[derive(Debug, Clone)]
pub struct FilteredSignal {
    pub h: PpgSignal,
    pub h2: PpgSignal,
    pub estimates: Vec<crate::spectral::HarmonicEstimate>,
}

pub fn filter_signal(
    sig: &PpgSignal,
    mode: FilterMode,
    cfg: &FilterConfig,
) -> Result<FilteredSignal> {
    let (h, estimates) = match mode {
        FilterMode::Soa => (soa_filter(sig)?, estimate_f1h(sig, cfg.window())?),
        FilterMode::Harmonic => {
            let out = harmonic_filter(sig, cfg)?;
            (out.signal, out.estimates)
        }
    };
    let h2 = second_derivative(&h)?;
    Ok(FilteredSignal { h, h2, estimates })
}

/// All periods of one subject in chronological order.
#[derive(Debug, Clone)]
pub struct ProcessedSubject {
    pub subject_id: String,
    pub periods: Vec<CardiacPeriod>,
    pub outcomes: Vec<PeriodOutcome>,
    /// Cross-track error of each period's h(t) against the subject's mean.
    pub cte: Vec<f64>,
    /// Recording length in seconds.
    pub elapsed_s: f64,
}

impl ProcessedSubject {
    pub fn accepted(&self) -> impl Iterator<Item = &FeatureVector> {
        self.outcomes.iter().filter_map(|o| o.features())
    }

    pub fn morphology_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for o in &self.outcomes {
            let k = match o.morphology() {
                MorphologyClass::M1 => 0,
                MorphologyClass::M2 => 1,
                MorphologyClass::M3 => 2,
                MorphologyClass::Discard => 3,
            };
            c[k] += 1;
        }
        c
    }
}

pub fn process_signal(
    sig: &PpgSignal,
    mode: FilterMode,
    filter_cfg: &FilterConfig,
    seg_cfg: &SegmentConfig,
) -> Result<ProcessedSubject> {
    let subject_id = sig.subject_id.clone().unwrap_or_default();
    let filtered = filter_signal(sig, mode, filter_cfg)?;
    let mut periods = segment_periods(&filtered.h, &filtered.h2, &filtered.estimates, seg_cfg)?;
    for p in periods.iter_mut() {
        p.subject_id = Some(subject_id.clone());
    }
    let outcomes = periods
        .iter()
        .map(|p| {
            let morph = p.morphology(seg_cfg.prominence_frac);
            if morph == MorphologyClass::Discard {
                return PeriodOutcome::Discarded;
            }
            match extract_features(p, seg_cfg.prominence_frac) {
                Ok(f) => PeriodOutcome::Accepted(f),
                Err(Error::HMorphologyMismatch { .. }) | Err(Error::DegenerateGap(..)) => {
                    PeriodOutcome::HMismatch(morph)
                }
                Err(_) => PeriodOutcome::Discarded,
            }
        })
        .collect();
    let cte = if periods.len() >= 2 {
        cte_variance(&periods, Trace::H)?.per_period_cte
    } else {
        vec![0.0; periods.len()]
    };
    Ok(ProcessedSubject {
        subject_id,
        periods,
        outcomes,
        cte,
        elapsed_s: sig.duration_s(),
    })
}

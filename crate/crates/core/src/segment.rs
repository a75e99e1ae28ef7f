//! Valley-to-valley cardiac period segmentation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::{classify_morphology, detect_extrema, Extrema, MorphologyClass};
use crate::signal::PpgSignal;
use crate::spectral::HarmonicEstimate;
use crate::spline::resample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Samples per normalized period.
    pub period_len: usize,
    pub prominence_frac: f64,
    /// Accepted period durations, seconds.
    pub duration_bounds_s: (f64, f64),
    /// Boundary search half-width as a fraction of the expected period.
    pub search_tolerance: f64,
    /// Drop the first and last period, whose shape is bent by filter edge
    /// transients.
    pub drop_edge_periods: bool,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            period_len: 100,
            prominence_frac: crate::extrema::DEFAULT_PROMINENCE_FRAC,
            duration_bounds_s: (1.0 / 3.0, 2.0),
            search_tolerance: 0.25,
            drop_edge_periods: true,
        }
    }
}

/// One heartbeat, time- and amplitude-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardiacPeriod {
    pub h_samples: Vec<f64>,
    pub h2_samples: Vec<f64>,
    /// Period length t_p in seconds.
    pub duration_s: f64,
    pub raw_start_idx: usize,
    pub raw_end_idx: usize,
    pub subject_id: Option<String>,
    /// Peak-to-peak of the raw h segment before normalization.
    pub h_span: f64,
    /// Peak-to-peak of the raw h'' segment before normalization.
    pub h2_span: f64,
}

impl CardiacPeriod {
    pub fn h2_extrema(&self, prominence_frac: f64) -> Extrema {
        detect_extrema(&self.h2_samples, prominence_frac)
    }

    pub fn morphology(&self, prominence_frac: f64) -> MorphologyClass {
        classify_morphology(&self.h2_extrema(prominence_frac))
    }
}

/// Returns the normalized copy and the original span, or `None` when flat.
fn min_max(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return None;
    }
    Some((x.iter().map(|v| (v - lo) / span).collect(), span))
}

/// Lowest strict local minimum in `[lo, hi]`.
fn deepest_valley(x: &[f64], lo: usize, hi: usize) -> Option<usize> {
    let lo = lo.max(1);
    let hi = hi.min(x.len().saturating_sub(2));
    (lo..=hi)
        .filter(|&i| x[i] <= x[i - 1] && x[i] < x[i + 1])
        .min_by(|&a, &b| x[a].total_cmp(&x[b]))
}

fn expected_period_s(estimates: &[HarmonicEstimate], t: f64) -> f64 {
    let e = estimates
        .iter()
        .min_by(|a, b| {
            (a.center_s() - t)
                .abs()
                .total_cmp(&(b.center_s() - t).abs())
        })
        .expect("non-empty estimates");
    1.0 / e.f1h_hz
}

/// Cuts `h` into valley-to-valley periods guided by the local heart rate and
/// applies the same boundaries to `h2`.
pub fn segment_periods(
    h: &PpgSignal,
    h2: &PpgSignal,
    estimates: &[HarmonicEstimate],
    cfg: &SegmentConfig,
) -> Result<Vec<CardiacPeriod>> {
    if h.len() != h2.len() || h.sample_rate_hz != h2.sample_rate_hz {
        return Err(Error::InvalidConfig(
            "h and h'' must share length and sample rate".into(),
        ));
    }
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no harmonic estimates".into()));
    }
    let x = &h.samples;
    let n = x.len();
    let fs = h.sample_rate_hz;
    let tol = cfg.search_tolerance;

    let mut bounds = Vec::new();
    let first_span = (expected_period_s(estimates, 0.0) * fs).round() as usize;
    if let Some(b) = deepest_valley(x, 0, first_span.min(n - 1)) {
        bounds.push(b);
        loop {
            let prev = *bounds.last().unwrap();
            let period = expected_period_s(estimates, prev as f64 / fs) * fs;
            let lo = prev + ((1.0 - tol) * period).round().max(1.0) as usize;
            let hi = prev + ((1.0 + tol) * period).round() as usize;
            if lo >= n - 1 {
                break;
            }
            match deepest_valley(x, lo, hi) {
                Some(b) => bounds.push(b),
                None if hi < n - 1 => {
                    // No clean valley (flat or noisy stretch): cut at the lowest
                    // sample so the beat grid keeps its phase.
                    let b = (lo..=hi).min_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
                    bounds.push(b);
                }
                None => break,
            }
        }
    }

    if cfg.drop_edge_periods && bounds.len() >= 2 {
        bounds.remove(0);
        bounds.pop();
    }
    let (dmin, dmax) = cfg.duration_bounds_s;
    let mut periods = Vec::new();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let duration = (b - a) as f64 / fs;
        if duration < dmin - 1e-9 || duration > dmax + 1e-9 {
            continue;
        }
        let hs = resample(&x[a..=b], cfg.period_len);
        let h2s = resample(&h2.samples[a..=b], cfg.period_len);
        let (Some((hn, h_span)), Some((h2n, h2_span))) = (min_max(&hs), min_max(&h2s)) else {
            continue;
        };
        periods.push(CardiacPeriod {
            h_samples: hn,
            h2_samples: h2n,
            duration_s: duration,
            raw_start_idx: a,
            raw_end_idx: b,
            subject_id: h.subject_id.clone(),
            h_span,
            h2_span,
        });
    }
    if periods.is_empty() {
        return Err(Error::NoPeriodsFound);
    }
    Ok(periods)
}

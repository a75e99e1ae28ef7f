//! Frequency analysis and filtering: first-harmonic tracking, fixed-band and
//! per-subject adaptive Butterworth band-pass, second derivatives.

pub mod butterworth;
pub mod periodogram;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::PpgSignal;

pub use butterworth::{bandpass, Biquad, Sos};
pub use periodogram::{periodogram, Periodogram};

/// Lowest heart rate searched for (athletes at rest).
pub const F1H_MIN_HZ: f64 = 0.5;
/// Upper search bound; keeps the second harmonic of slow hearts out.
pub const F1H_MAX_HZ: f64 = 3.0;
/// Periodogram bins are never coarser than this.
pub const MAX_BIN_HZ: f64 = 0.05;

/// Fixed band of the conventional (subject-agnostic) filter.
pub const SOA_BAND: BandSpec = BandSpec {
    f_low_hz: 0.5,
    f_high_hz: 12.5,
};

const CROSSFADE_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_s: f64,
    pub stride_s: f64,
}

impl Default for WindowPlan {
    fn default() -> Self {
        Self {
            window_s: 5.0,
            stride_s: 1.0,
        }
    }
}

impl WindowPlan {
    pub fn validate(&self) -> Result<()> {
        if self.stride_s > 0.0 && self.stride_s <= self.window_s && self.window_s.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "window plan needs 0 < stride ({}) <= window ({})",
                self.stride_s, self.window_s
            )))
        }
    }

    /// Window start indices: stride-aligned, plus one end-aligned window when
    /// the stride grid leaves a tail uncovered.
    fn starts(&self, n: usize, fs: f64, cover_tail: bool) -> (usize, Vec<usize>) {
        let wlen = ((self.window_s * fs).round() as usize).clamp(2, n);
        let step = ((self.stride_s * fs).round() as usize).max(1);
        let mut starts: Vec<usize> = (0..)
            .map(|k| k * step)
            .take_while(|s| s + wlen <= n)
            .collect();
        if cover_tail {
            let last = *starts.last().unwrap_or(&0);
            if last + wlen < n {
                starts.push(n - wlen);
            }
        }
        (wlen, starts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl BandSpec {
    pub fn check(&self, sample_rate: f64) -> Result<()> {
        if self.f_low_hz > 0.0
            && self.f_low_hz < self.f_high_hz
            && self.f_high_hz < sample_rate / 2.0
        {
            Ok(())
        } else {
            Err(Error::BandOutOfRange {
                f_low: self.f_low_hz,
                f_high: self.f_high_hz,
                sample_rate,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicEstimate {
    pub f1h_hz: f64,
    pub window_start_s: f64,
    pub window_len_s: f64,
    pub power_spectrum: Vec<(f64, f64)>,
}

impl HarmonicEstimate {
    pub fn center_s(&self) -> f64 {
        self.window_start_s + self.window_len_s / 2.0
    }
}

/// Tunables of the adaptive filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub window_s: f64,
    pub stride_s: f64,
    pub fl_multiplier: f64,
    pub fh_multiplier: f64,
    pub butterworth_order: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let w = WindowPlan::default();
        Self {
            window_s: w.window_s,
            stride_s: w.stride_s,
            fl_multiplier: 2.0,
            fh_multiplier: 5.5,
            butterworth_order: 2,
        }
    }
}

impl FilterConfig {
    pub fn window(&self) -> WindowPlan {
        WindowPlan {
            window_s: self.window_s,
            stride_s: self.stride_s,
        }
    }

    pub fn adaptive_band(&self, f1h_hz: f64) -> Result<BandSpec> {
        if !(F1H_MIN_HZ..=F1H_MAX_HZ).contains(&f1h_hz) {
            return Err(Error::F1hOutOfRange(f1h_hz));
        }
        Ok(BandSpec {
            f_low_hz: self.fl_multiplier * f1h_hz,
            f_high_hz: self.fh_multiplier * f1h_hz,
        })
    }
}

fn check_duration(sig: &PpgSignal, needed_s: f64) -> Result<()> {
    let d = sig.duration_s();
    // One sample of slack: a 5 s window at 100 Hz spans 500 samples = 4.99 s.
    if d + 1.0 / sig.sample_rate_hz < needed_s - 1e-9 {
        return Err(Error::SignalTooShort {
            duration_s: d,
            needed_s,
        });
    }
    Ok(())
}

fn f1h_of(x: &[f64], fs: f64) -> (f64, Periodogram) {
    let p = periodogram(x, fs, MAX_BIN_HZ);
    let f = p.peak_in(F1H_MIN_HZ, F1H_MAX_HZ).unwrap_or(F1H_MIN_HZ);
    (f, p)
}

/// First-harmonic frequency per stride position.
pub fn estimate_f1h(sig: &PpgSignal, window: WindowPlan) -> Result<Vec<HarmonicEstimate>> {
    window.validate()?;
    check_duration(sig, window.window_s)?;
    let fs = sig.sample_rate_hz;
    let (wlen, starts) = window.starts(sig.len(), fs, false);
    Ok(starts
        .into_iter()
        .map(|s| {
            let (f, p) = f1h_of(&sig.samples[s..s + wlen], fs);
            HarmonicEstimate {
                f1h_hz: f,
                window_start_s: s as f64 / fs,
                window_len_s: wlen as f64 / fs,
                power_spectrum: p.pairs(),
            }
        })
        .collect())
}

fn default_padlen(sos: &Sos, band: &BandSpec, fs: f64) -> usize {
    let scipy_like = 3 * (2 * sos.sections.len() + 1);
    scipy_like.max((fs / band.f_low_hz).ceil() as usize)
}

/// Zero-phase Butterworth band-pass.
pub fn butterworth_bandpass(sig: &PpgSignal, band: BandSpec, order: usize) -> Result<PpgSignal> {
    band.check(sig.sample_rate_hz)?;
    let sos = bandpass(order, band.f_low_hz, band.f_high_hz, sig.sample_rate_hz)?;
    let pad = default_padlen(&sos, &band, sig.sample_rate_hz);
    Ok(sig.map_samples(sos.filtfilt(&sig.samples, pad)))
}

/// Fixed 0.5-12.5 Hz band used by conventional pipelines: f(t).
pub fn soa_filter(sig: &PpgSignal) -> Result<PpgSignal> {
    butterworth_bandpass(sig, SOA_BAND, 2)
}

/// `[2 f1h, 5.5 f1h]`.
pub fn adaptive_band(f1h_hz: f64) -> Result<BandSpec> {
    FilterConfig::default().adaptive_band(f1h_hz)
}

/// Result of adaptive filtering: h(t) plus the per-window estimates that
/// drove it.
#[derive(Debug, Clone)]
pub struct HarmonicOutput {
    pub signal: PpgSignal,
    pub estimates: Vec<HarmonicEstimate>,
}

/// Per-subject adaptive filter: each window is band-passed around its own
/// first harmonic and the central stride of each window is stitched together
/// with short linear cross-fades.
pub fn harmonic_filter(sig: &PpgSignal, cfg: &FilterConfig) -> Result<HarmonicOutput> {
    let window = cfg.window();
    window.validate()?;
    check_duration(sig, window.window_s)?;
    let fs = sig.sample_rate_hz;
    let n = sig.len();
    let (wlen, starts) = window.starts(n, fs, true);

    let mut filtered = Vec::with_capacity(starts.len());
    let mut estimates = Vec::with_capacity(starts.len());
    for &s in &starts {
        let seg = &sig.samples[s..s + wlen];
        let (f1h, p) = f1h_of(seg, fs);
        let band = cfg.adaptive_band(f1h)?;
        band.check(fs)?;
        let sos = bandpass(cfg.butterworth_order, band.f_low_hz, band.f_high_hz, fs)?;
        filtered.push(sos.filtfilt(seg, default_padlen(&sos, &band, fs)));
        estimates.push(HarmonicEstimate {
            f1h_hz: f1h,
            window_start_s: s as f64 / fs,
            window_len_s: wlen as f64 / fs,
            power_spectrum: p.pairs(),
        });
    }

    // Ownership boundaries sit halfway between consecutive window centres.
    let centers: Vec<f64> = starts
        .iter()
        .map(|&s| s as f64 + wlen as f64 / 2.0)
        .collect();
    let seams: Vec<usize> = centers
        .windows(2)
        .map(|c| (0.5 * (c[0] + c[1])).round() as usize)
        .collect();

    let mut out = vec![0.0; n];
    let mut k = 0;
    for (i, y) in out.iter_mut().enumerate() {
        while k < seams.len() && i >= seams[k] {
            k += 1;
        }
        *y = filtered[k][i - starts[k]];
    }

    let half = ((CROSSFADE_S * fs / 2.0).round() as usize).max(1);
    for (j, &seam) in seams.iter().enumerate() {
        let (a, b) = (j, j + 1);
        // Only blend where both windows have data.
        let lo = seam.saturating_sub(half).max(starts[b]);
        let hi = (seam + half).min(starts[a] + wlen);
        if hi <= lo {
            continue;
        }
        let span = (hi - lo) as f64;
        for i in lo..hi {
            let w = (i - lo) as f64 / span + 0.5 / span;
            out[i] = (1.0 - w) * filtered[a][i - starts[a]] + w * filtered[b][i - starts[b]];
        }
    }

    Ok(HarmonicOutput {
        signal: sig.map_samples(out),
        estimates,
    })
}

/// Central second difference scaled to physical units; endpoints copy their
/// nearest interior neighbour.
pub fn second_derivative(sig: &PpgSignal) -> Result<PpgSignal> {
    let x = &sig.samples;
    let n = x.len();
    if n < 5 {
        return Err(Error::TooShort { needed: 5, got: n });
    }
    let r2 = sig.sample_rate_hz * sig.sample_rate_hz;
    let mut y = vec![0.0; n];
    for i in 1..n - 1 {
        y[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) * r2;
    }
    y[0] = y[1];
    y[n - 1] = y[n - 2];
    Ok(sig.map_samples(y))
}

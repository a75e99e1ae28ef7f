use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Periodogram {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Frequency of the largest bin inside `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, _)| *f)
    }

    /// Integrated power over `[lo, hi]`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution();
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p * df)
            .sum()
    }

    /// Power summed over the bins within `half_width` of `f`.
    pub fn power_near(&self, f: f64, half_width: f64) -> f64 {
        self.band_power(f - half_width, f + half_width)
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.freqs
            .iter()
            .copied()
            .zip(self.power.iter().copied())
            .collect()
    }
}

/// Zero-mean, Hann-tapered periodogram, zero-padded to a power of two whose
/// bin spacing is at most `max_bin_hz`.
pub fn periodogram(x: &[f64], fs: f64, max_bin_hz: f64) -> Periodogram {
    let n = x.len();
    let min_len = (fs / max_bin_hz).ceil() as usize;
    let nfft = n.max(min_len).max(2).next_power_of_two();

    let mean = x.iter().sum::<f64>() / n.max(1) as f64;
    let window: Vec<f64> = if n > 1 {
        (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
            .collect()
    } else {
        vec![1.0; n]
    };
    let wss: f64 = window
        .iter()
        .map(|w| w * w)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);

    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&window)
        .map(|(v, w)| Complex::new((v - mean) * w, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(nfft)
        .collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let half = nfft / 2;
    let scale = 1.0 / (fs * wss);
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let mut p = c.norm_sqr() * scale;
        if k != 0 && k != half {
            p *= 2.0;
        }
        freqs.push(k as f64 * fs / nfft as f64);
        power.push(p);
    }
    Periodogram { freqs, power }
}

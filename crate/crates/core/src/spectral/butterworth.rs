//! Butterworth band-pass design (bilinear transform with pre-warped edges) and
//! cascaded second-order-section filtering, including zero-phase
//! forward-backward application.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Direct-form biquad; `a[0]` is implicitly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: C64) -> C64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Complex frequency response at `f` Hz.
    pub fn response(&self, f: f64, fs: f64) -> C64 {
        let w = 2.0 * PI * f / fs;
        let z_inv = C64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        self.response(f, fs).norm()
    }

    /// Single forward pass, transposed direct form II, zero initial state.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let zi = vec![[0.0; 2]; self.sections.len()];
        self.filter_with_state(x, zi)
    }

    pub fn impulse_response(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        if n > 0 {
            x[0] = 1.0;
        }
        self.filter(&x)
    }

    fn filter_with_state(&self, x: &[f64], mut state: Vec<[f64; 2]>) -> Vec<f64> {
        let mut y = x.to_vec();
        for (s, z) in self.sections.iter().zip(state.iter_mut()) {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in y.iter_mut() {
                let xi = *v;
                let yi = b0 * xi + z[0];
                z[0] = b1 * xi - a1 * yi + z[1];
                z[1] = b2 * xi - a2 * yi;
                *v = yi;
            }
        }
        y
    }

    /// Per-section state that makes a constant unit input a steady state.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let z = [(g - s.b[0]) * level, (s.b[2] - s.a[2] * g) * level];
                level *= g;
                z
            })
            .collect()
    }

    fn filter_steady(&self, x: &[f64]) -> Vec<f64> {
        let x0 = x.first().copied().unwrap_or(0.0);
        let zi = self
            .step_state()
            .into_iter()
            .map(|[a, b]| [a * x0, b * x0])
            .collect();
        self.filter_with_state(x, zi)
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding of
    /// `padlen` samples at each end (clamped to `len - 1`).
    pub fn filtfilt(&self, x: &[f64], padlen: usize) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = padlen.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut y = self.filter_steady(&ext);
        y.reverse();
        let mut y = self.filter_steady(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Designs an order-`order` Butterworth band-pass (the analog low-pass
/// prototype order; the digital filter has `2 * order` poles).
pub fn bandpass(order: usize, f_low: f64, f_high: f64, fs: f64) -> Result<Sos> {
    let nyq = fs / 2.0;
    if order == 0 || !(f_low > 0.0 && f_low < f_high && f_high < nyq) {
        return Err(Error::BandOutOfRange {
            f_low,
            f_high,
            sample_rate: fs,
        });
    }
    let k = 2.0 * fs;
    let wl = k * (PI * f_low / fs).tan();
    let wh = k * (PI * f_high / fs).tan();
    let w0 = (wl * wh).sqrt();
    let bw = wh - wl;

    let to_z = |s: C64| (C64::new(k, 0.0) + s) / (C64::new(k, 0.0) - s);
    let split = |p: C64| {
        let a = p * (bw / 2.0);
        let d = (a * a - C64::new(w0 * w0, 0.0)).sqrt();
        (to_z(a + d), to_z(a - d))
    };
    let section = |r1: C64, r2: C64| Biquad {
        b: [1.0, 0.0, -1.0],
        a: [1.0, -(r1 + r2).re, (r1 * r2).re],
    };

    let mut sections = Vec::with_capacity(order);
    for i in 1..=order {
        let theta = PI * (2 * i + order - 1) as f64 / (2 * order) as f64;
        let p = C64::from_polar(1.0, theta);
        if p.im > 1e-12 {
            let (z1, z2) = split(p);
            sections.push(section(z1, z1.conj()));
            sections.push(section(z2, z2.conj()));
        } else if p.im.abs() <= 1e-12 {
            let (z1, z2) = split(C64::new(p.re, 0.0));
            sections.push(section(z1, z2));
        }
    }

    let mut sos = Sos { sections };
    // Unit gain at the digital frequency that maps to the analog centre.
    let fc = fs / PI * (w0 / k).atan();
    let g = sos.magnitude(fc, fs);
    for b in sos.sections[0].b.iter_mut() {
        *b /= g;
    }
    Ok(sos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_count_matches_order() {
        for order in 1..=5 {
            let sos = bandpass(order, 1.0, 4.0, 100.0).unwrap();
            assert_eq!(sos.sections.len(), order);
        }
    }

    #[test]
    fn cutoffs_are_half_power() {
        for order in 1..=4 {
            let sos = bandpass(order, 0.5, 12.5, 100.0).unwrap();
            for f in [0.5, 12.5] {
                let m = sos.magnitude(f, 100.0);
                assert!((m - 0.5f64.sqrt()).abs() < 1e-9, "order {order} f {f}: {m}");
            }
        }
    }

    #[test]
    fn poles_inside_unit_circle() {
        let sos = bandpass(2, 0.5, 12.5, 1000.0).unwrap();
        for s in &sos.sections {
            // |r1 r2| = a2 for conjugate pairs
            assert!(s.a[2].abs() < 1.0);
        }
    }

    #[test]
    fn rejects_bad_bands() {
        assert!(bandpass(2, 0.5, 12.5, 20.0).is_err());
        assert!(bandpass(2, 3.0, 2.0, 100.0).is_err());
        assert!(bandpass(2, 0.0, 2.0, 100.0).is_err());
        assert!(bandpass(0, 1.0, 2.0, 100.0).is_err());
    }

    #[test]
    fn dc_is_removed_exactly_from_constant() {
        let sos = bandpass(2, 0.5, 12.5, 100.0).unwrap();
        let y = sos.filtfilt(&vec![5.0; 1000], 300);
        assert!(y.iter().all(|v| v.abs() < 1e-9), "{:?}", &y[..5]);
    }
}

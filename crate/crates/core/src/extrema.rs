//! Peak/valley detection on normalized periods and morphology classes.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const DEFAULT_PROMINENCE_FRAC: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExtremumKind {
    Peak,
    Valley,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub index: usize,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Interleaved extrema of one period. Both period boundaries are valleys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extrema {
    pub peaks: Vec<(usize, f64)>,
    pub valleys: Vec<(usize, f64)>,
}

impl Extrema {
    /// All extrema merged by index.
    pub fn merged(&self) -> Vec<Extremum> {
        let mut all: Vec<Extremum> = self
            .peaks
            .iter()
            .map(|&(index, value)| Extremum {
                index,
                value,
                kind: ExtremumKind::Peak,
            })
            .chain(self.valleys.iter().map(|&(index, value)| Extremum {
                index,
                value,
                kind: ExtremumKind::Valley,
            }))
            .collect();
        all.sort_by_key(|e| e.index);
        all
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.peaks.len(), self.valleys.len())
    }
}

/// Cardiac period shape class from its second-derivative extrema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MorphologyClass {
    M1,
    M2,
    M3,
    Discard,
}

impl MorphologyClass {
    pub const ACCEPTED: [MorphologyClass; 3] = [Self::M1, Self::M2, Self::M3];

    /// Number of interleaved fiducial points on the second derivative.
    pub fn h2_fiducials(self) -> Option<usize> {
        match self {
            Self::M1 => Some(7),
            Self::M2 => Some(9),
            Self::M3 => Some(11),
            Self::Discard => None,
        }
    }

    /// Full combined feature length (h part + h'' part).
    pub fn feature_dims(self) -> Option<usize> {
        self.h2_fiducials()
            .map(|k| crate::features::H_FEATURES + 3 * (k - 1))
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "M1" | "m1" => Some(Self::M1),
            "M2" | "m2" => Some(Self::M2),
            "M3" | "m3" => Some(Self::M3),
            "Discard" | "discard" => Some(Self::Discard),
            _ => None,
        }
    }
}

impl fmt::Display for MorphologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::M3 => "M3",
            Self::Discard => "Discard",
        };
        f.write_str(s)
    }
}

pub fn classify_morphology(ext: &Extrema) -> MorphologyClass {
    match ext.counts() {
        (3, 4) => MorphologyClass::M1,
        (4, 5) => MorphologyClass::M2,
        (5, 6) => MorphologyClass::M3,
        _ => MorphologyClass::Discard,
    }
}

/// Topographic prominence of the peak at `i`: its height above the higher
/// of the two lowest points reached before climbing above it on either side.
fn peak_prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left_min = h;
    for &v in x[..i].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Interior local extrema by sign change of the first difference; plateaus
/// report their middle sample.
fn local_extrema(x: &[f64]) -> Vec<(usize, ExtremumKind)> {
    // Runs of equal values: (start, end_inclusive)
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut s = 0;
    for i in 1..=x.len() {
        if i == x.len() || x[i] != x[s] {
            runs.push((s, i - 1));
            s = i;
        }
    }
    let mut out = Vec::new();
    for w in runs.windows(3) {
        let (prev, cur, next) = (x[w[0].0], x[w[1].0], x[w[2].0]);
        let mid = (w[1].0 + w[1].1) / 2;
        if cur > prev && cur > next {
            out.push((mid, ExtremumKind::Peak));
        } else if cur < prev && cur < next {
            out.push((mid, ExtremumKind::Valley));
        }
    }
    out
}

/// Peaks and valleys of a period, filtered by topographic prominence relative
/// to the period's range. The first and last samples are always valleys and
/// adjacent extrema of the same kind are collapsed to the more extreme one.
pub fn detect_extrema(x: &[f64], prominence_frac: f64) -> Extrema {
    let n = x.len();
    if n == 0 {
        return Extrema::default();
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let range = hi - lo;
    let min_prom = prominence_frac * range;
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();

    let mut seq: Vec<(Extremum, bool)> = Vec::new();
    seq.push((
        Extremum {
            index: 0,
            value: x[0],
            kind: ExtremumKind::Valley,
        },
        true,
    ));
    if range > 0.0 {
        for (i, kind) in local_extrema(x) {
            let prom = match kind {
                ExtremumKind::Peak => peak_prominence(x, i),
                ExtremumKind::Valley => peak_prominence(&neg, i),
            };
            if prom >= min_prom && prom > 0.0 {
                seq.push((
                    Extremum {
                        index: i,
                        value: x[i],
                        kind,
                    },
                    false,
                ));
            }
        }
    }
    if n > 1 {
        seq.push((
            Extremum {
                index: n - 1,
                value: x[n - 1],
                kind: ExtremumKind::Valley,
            },
            true,
        ));
    }

    let mut kept: Vec<(Extremum, bool)> = Vec::with_capacity(seq.len());
    for (e, boundary) in seq {
        match kept.last_mut() {
            // Two boundary valleys with nothing kept in between: degenerate
            // (monotone or constant) period, keep both.
            Some((top, top_boundary)) if top.kind == e.kind && !(boundary && *top_boundary) => {
                let better = match e.kind {
                    ExtremumKind::Peak => e.value > top.value,
                    ExtremumKind::Valley => e.value < top.value,
                };
                if boundary || (!*top_boundary && better) {
                    *top = e;
                    *top_boundary = boundary;
                }
            }
            _ => kept.push((e, boundary)),
        }
    }

    let mut ext = Extrema::default();
    for (e, _) in kept {
        match e.kind {
            ExtremumKind::Peak => ext.peaks.push((e.index, e.value)),
            ExtremumKind::Valley => ext.valleys.push((e.index, e.value)),
        }
    }
    ext
}

//! Fiducial feature vectors.
//!
//! The h(t) part is `[t_p, area_ratio, (dt, da, slope) x 4]` over the five
//! fiducials valley/systolic peak/dicrotic notch/second wave/valley. The
//! h''(t) part is `(dt, da, slope)` for every consecutive pair of its 7, 9 or
//! 11 interleaved extrema. Times are fractions of the period and amplitudes
//! are min-max normalized, so only `t_p` carries absolute scale.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::{classify_morphology, detect_extrema, ExtremumKind, MorphologyClass};
use crate::segment::CardiacPeriod;

/// Length of the h(t) part.
pub const H_FEATURES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiducialPoint {
    pub t_norm: f64,
    pub a_norm: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub morphology: MorphologyClass,
    pub values: Vec<f64>,
    pub subject_id: String,
}

impl FeatureVector {
    pub fn new(
        morphology: MorphologyClass,
        values: Vec<f64>,
        subject_id: impl Into<String>,
    ) -> Self {
        Self {
            morphology,
            values,
            subject_id: subject_id.into(),
        }
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }
}

fn to_fiducials(samples: &[f64], prominence_frac: f64) -> Vec<FiducialPoint> {
    let last = (samples.len() - 1).max(1) as f64;
    detect_extrema(samples, prominence_frac)
        .merged()
        .into_iter()
        .map(|e| FiducialPoint {
            t_norm: e.index as f64 / last,
            a_norm: e.value,
            kind: e.kind,
        })
        .collect()
}

/// The five h(t) fiducials; anything other than 2 peaks and 3 valleys is
/// rejected.
pub fn fiducials_h(period: &CardiacPeriod, prominence_frac: f64) -> Result<Vec<FiducialPoint>> {
    let pts = to_fiducials(&period.h_samples, prominence_frac);
    let peaks = pts.iter().filter(|p| p.kind == ExtremumKind::Peak).count();
    let valleys = pts.len() - peaks;
    if peaks != 2 || valleys != 3 {
        return Err(Error::HMorphologyMismatch { peaks, valleys });
    }
    Ok(pts)
}

fn push_gaps(out: &mut Vec<f64>, pts: &[FiducialPoint]) -> Result<()> {
    for (i, w) in pts.windows(2).enumerate() {
        let dt = w[1].t_norm - w[0].t_norm;
        if !(dt > 0.0) {
            return Err(Error::DegenerateGap(i, i + 1));
        }
        let da = w[1].a_norm - w[0].a_norm;
        out.extend([dt, da, da / dt]);
    }
    Ok(())
}

/// Trapezoidal area under `y` between sample indices `a..=b` with unit total
/// time span over the period.
fn area(y: &[f64], a: usize, b: usize) -> f64 {
    let dt = 1.0 / (y.len() - 1) as f64;
    y[a..=b].windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

/// Combined `h || h''` feature vector for an accepted period.
pub fn extract_features(period: &CardiacPeriod, prominence_frac: f64) -> Result<FeatureVector> {
    let ext2 = detect_extrema(&period.h2_samples, prominence_frac);
    let morphology = classify_morphology(&ext2);
    if morphology == MorphologyClass::Discard {
        return Err(Error::UnknownMorphology(morphology.to_string()));
    }
    let fid_h = fiducials_h(period, prominence_frac)?;

    let mut values = Vec::with_capacity(morphology.feature_dims().unwrap_or(0));
    values.push(period.duration_s);

    let h = &period.h_samples;
    let last = h.len() - 1;
    let systolic = (fid_h[1].t_norm * last as f64).round() as usize;
    let pre = area(h, 0, systolic);
    let post = area(h, systolic, last);
    if !(post > 0.0) {
        return Err(Error::DegenerateGap(1, 4));
    }
    values.push(pre / post);
    push_gaps(&mut values, &fid_h)?;

    let fid_h2 = to_fiducials(&period.h2_samples, prominence_frac);
    push_gaps(&mut values, &fid_h2)?;

    debug_assert_eq!(Some(values.len()), morphology.feature_dims());
    Ok(FeatureVector {
        morphology,
        values,
        subject_id: period.subject_id.clone().unwrap_or_default(),
    })
}

/// Writes `subject,morphology,f0..f{d-1}`. Rows of different morphologies
/// have different widths; the header covers the widest.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureVector]) -> Result<()> {
    let width = rows.iter().map(|r| r.dims()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec!["subject".to_string(), "morphology".to_string()];
    header.extend((0..width).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.subject_id.clone(), r.morphology.to_string()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: std::io::Read>(input: R) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |reason: String| Error::MalformedInput { line, reason };
        if rec.len() < 3 {
            return Err(bad("expected subject, morphology and values".into()));
        }
        let morph = MorphologyClass::parse(&rec[1])
            .ok_or_else(|| bad(format!("unknown morphology {:?}", &rec[1])))?;
        let values = rec
            .iter()
            .skip(2)
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| bad(format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(FeatureVector::new(morph, values, &rec[0]));
    }
    Ok(out)
}

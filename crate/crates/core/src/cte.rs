//! Cross-track error of periods against their mean period.
//!
//! Each period is a polyline in `(index / L, amplitude)` space, amplitudes
//! rescaled by the subject's mean raw peak-to-peak. A period's error is the
//! mean perpendicular distance of its points to the mean-period polyline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::CardiacPeriod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trace {
    H,
    H2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CteReport {
    pub per_period_cte: Vec<f64>,
    pub signal_variance: f64,
    pub mean_period: Vec<f64>,
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

pub fn point_polyline_distance(p: (f64, f64), line: &[(f64, f64)]) -> f64 {
    if line.len() == 1 {
        return point_segment_distance(p, line[0], line[0]);
    }
    line.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn polyline(values: &[f64], scale: f64) -> Vec<(f64, f64)> {
    let l = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(j, v)| (j as f64 / l, v * scale))
        .collect()
}

pub fn cte_variance(periods: &[CardiacPeriod], which: Trace) -> Result<CteReport> {
    if periods.len() < 2 {
        return Err(Error::TooFewPeriods {
            needed: 2,
            got: periods.len(),
        });
    }
    fn pick(p: &CardiacPeriod, which: Trace) -> (&Vec<f64>, f64) {
        match which {
            Trace::H => (&p.h_samples, p.h_span),
            Trace::H2 => (&p.h2_samples, p.h2_span),
        }
    }
    let pick = |p| pick(p, which);
    let len = pick(&periods[0]).0.len();
    if periods.iter().any(|p| pick(p).0.len() != len) {
        return Err(Error::InvalidConfig("periods differ in length".into()));
    }
    let scale = periods.iter().map(|p| pick(p).1).sum::<f64>() / periods.len() as f64;

    let mut mean = vec![0.0; len];
    for p in periods {
        for (m, v) in mean.iter_mut().zip(pick(p).0) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= periods.len() as f64;
    }
    let mean_line = polyline(&mean, scale);

    let per_period_cte: Vec<f64> = periods
        .iter()
        .map(|p| {
            let pts = polyline(pick(p).0, scale);
            pts.iter()
                .map(|&q| point_polyline_distance(q, &mean_line))
                .sum::<f64>()
                / pts.len() as f64
        })
        .collect();
    let signal_variance =
        per_period_cte.iter().map(|e| e.abs()).sum::<f64>() / per_period_cte.len() as f64;
    Ok(CteReport {
        per_period_cte,
        signal_variance,
        mean_period: mean,
    })
}

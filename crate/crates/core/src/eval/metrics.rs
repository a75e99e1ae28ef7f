use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: f64,
    pub tnr: f64,
    pub bac: f64,
}

impl Rates {
    /// Averages per-class or per-subject rates; BAC is recomputed from the
    /// averaged TPR and TNR.
    pub fn mean(items: &[Rates]) -> Option<Rates> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let tpr = items.iter().map(|r| r.tpr).sum::<f64>() / n;
        let tnr = items.iter().map(|r| r.tnr).sum::<f64>() / n;
        Some(Rates {
            tpr,
            tnr,
            bac: (tpr + tnr) / 2.0,
        })
    }
}

/// TPR = TP/(TP+FN), TNR = TN/(TN+FP), BAC their mean.
pub fn bac(c: &ConfusionCounts) -> Result<Rates> {
    if c.tp + c.fn_ == 0 {
        return Err(Error::UndefinedRate("no positive samples"));
    }
    if c.tn + c.fp == 0 {
        return Err(Error::UndefinedRate("no negative samples"));
    }
    let tpr = c.tp as f64 / (c.tp + c.fn_) as f64;
    let tnr = c.tn as f64 / (c.tn + c.fp) as f64;
    Ok(Rates {
        tpr,
        tnr,
        bac: (tpr + tnr) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionStats {
    pub total_periods: u64,
    pub accepted_periods: u64,
    pub elapsed_s: f64,
    pub rate: f64,
    pub speed: f64,
}

pub fn acquisition(
    periods_all: u64,
    periods_accepted: u64,
    elapsed_s: f64,
) -> Result<AcquisitionStats> {
    if periods_accepted > periods_all {
        return Err(Error::InvalidCounts(format!(
            "{periods_accepted} accepted out of {periods_all}"
        )));
    }
    if !(elapsed_s >= 0.0) || !elapsed_s.is_finite() {
        return Err(Error::InvalidCounts(format!("elapsed time {elapsed_s}")));
    }
    if elapsed_s == 0.0 && periods_accepted > 0 {
        return Err(Error::InvalidCounts("accepted periods in zero time".into()));
    }
    let rate = if periods_all == 0 {
        0.0
    } else {
        periods_accepted as f64 / periods_all as f64
    };
    let speed = if periods_accepted == 0 {
        0.0
    } else {
        periods_accepted as f64 / elapsed_s
    };
    Ok(AcquisitionStats {
        total_periods: periods_all,
        accepted_periods: periods_accepted,
        elapsed_s,
        rate,
        speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bac_examples() {
        let r = bac(&ConfusionCounts::new(9, 2, 8, 1)).unwrap();
        assert!(
            (r.tpr - 0.9).abs() < 1e-15
                && (r.tnr - 0.8).abs() < 1e-15
                && (r.bac - 0.85).abs() < 1e-15
        );
        assert_eq!(bac(&ConfusionCounts::new(5, 0, 5, 0)).unwrap().bac, 1.0);
        let r = bac(&ConfusionCounts::new(10, 10, 0, 0)).unwrap();
        assert_eq!((r.tpr, r.tnr, r.bac), (1.0, 0.0, 0.5));
        assert!(matches!(
            bac(&ConfusionCounts::new(0, 1, 1, 0)),
            Err(Error::UndefinedRate(_))
        ));
        assert!(matches!(
            bac(&ConfusionCounts::new(1, 0, 0, 0)),
            Err(Error::UndefinedRate(_))
        ));
    }

    #[test]
    fn acquisition_examples() {
        let a = acquisition(15557, 15301, 12444.0).unwrap();
        assert_eq!(a.rate, 15301.0 / 15557.0);
        assert_eq!(a.speed, 15301.0 / 12444.0);
        let z = acquisition(10, 0, 5.0).unwrap();
        assert_eq!((z.rate, z.speed), (0.0, 0.0));
        assert!(matches!(
            acquisition(3, 4, 1.0),
            Err(Error::InvalidCounts(_))
        ));
        assert!(matches!(
            acquisition(3, 1, -1.0),
            Err(Error::InvalidCounts(_))
        ));
    }

    proptest! {
        #[test]
        fn bac_bounds(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts::new(tp, fp, tn, fn_);
            if tp + fn_ > 0 && tn + fp > 0 {
                let r = bac(&c).unwrap();
                prop_assert!((0.0..=1.0).contains(&r.bac));
                prop_assert_eq!(r.bac, (r.tpr + r.tnr) / 2.0);
                prop_assert_eq!(r.bac == 1.0, fp == 0 && fn_ == 0);
            } else {
                prop_assert!(bac(&c).is_err());
            }
        }
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Subjects with fewer kept periods than this are excluded.
pub const MIN_SUBJECT_PERIODS: usize = 20;

pub const DEFAULT_FINITE_CAPS: [f64; 3] = [2.0, 4.0, 6.0];

/// Per-period CTE of one subject, in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectCte {
    pub subject_id: String,
    pub cte: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatedSubset {
    /// Variance cap; `None` means no cap.
    pub cap: Option<f64>,
    /// Indices of the kept periods per included subject.
    pub included: BTreeMap<String, Vec<usize>>,
    pub excluded_subjects: Vec<String>,
}

impl EmulatedSubset {
    pub fn label(&self) -> String {
        cap_label(self.cap)
    }

    pub fn admits(&self, cte: f64) -> bool {
        self.cap.is_none_or(|t| cte <= t)
    }

    pub fn period_count(&self) -> usize {
        self.included.values().map(Vec::len).sum()
    }
}

pub fn cap_label(cap: Option<f64>) -> String {
    match cap {
        Some(t) => format!("{t}"),
        None => "inf".into(),
    }
}

/// Keeps periods with `cte <= cap`, then drops subjects left with fewer than
/// `min_periods`. One subset per cap, in the given order.
pub fn emulate_subsets(
    subjects: &[SubjectCte],
    caps: &[Option<f64>],
    min_periods: usize,
) -> Vec<EmulatedSubset> {
    caps.iter()
        .map(|&cap| {
            let mut included = BTreeMap::new();
            let mut excluded_subjects = vec![];
            for s in subjects {
                let kept: Vec<usize> = s
                    .cte
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| cap.is_none_or(|t| **e <= t))
                    .map(|(i, _)| i)
                    .collect();
                if kept.len() >= min_periods {
                    included.insert(s.subject_id.clone(), kept);
                } else {
                    excluded_subjects.push(s.subject_id.clone());
                }
            }
            EmulatedSubset {
                cap,
                included,
                excluded_subjects,
            }
        })
        .collect()
}

/// `[2, 4, 6, inf]`.
pub fn default_caps() -> Vec<Option<f64>> {
    DEFAULT_FINITE_CAPS
        .iter()
        .map(|&t| Some(t))
        .chain([None])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subj(id: &str, cte: Vec<f64>) -> SubjectCte {
        SubjectCte {
            subject_id: id.into(),
            cte,
        }
    }

    #[test]
    fn zero_cte_keeps_everything() {
        let s = vec![subj("a", vec![0.0; 25]), subj("b", vec![0.0; 30])];
        for sub in emulate_subsets(&s, &default_caps(), MIN_SUBJECT_PERIODS) {
            assert_eq!(sub.included["a"].len(), 25);
            assert_eq!(sub.included["b"].len(), 30);
            assert!(sub.excluded_subjects.is_empty());
        }
    }

    #[test]
    fn twenty_period_rule() {
        let mut cte = vec![1.5; 19];
        cte.extend(vec![3.0; 11]);
        let subs = emulate_subsets(&[subj("a", cte)], &default_caps(), MIN_SUBJECT_PERIODS);
        assert_eq!(subs[0].excluded_subjects, vec!["a".to_string()]);
        assert_eq!(subs[1].included["a"].len(), 30);
        assert_eq!(subs[3].label(), "inf");
    }

    #[test]
    fn infinite_cap_only_drops_short_subjects() {
        let s = vec![subj("a", vec![100.0; 21]), subj("b", vec![0.0; 5])];
        let sub = &emulate_subsets(&s, &[None], MIN_SUBJECT_PERIODS)[0];
        assert_eq!(sub.included["a"].len(), 21);
        assert_eq!(sub.excluded_subjects, vec!["b".to_string()]);
    }
}

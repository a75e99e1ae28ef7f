//! z-scored Euclidean K-NN.

use serde::{Deserialize, Serialize};

use crate::linalg::{euclidean, Standardizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl KnnModel {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Self {
        let standardizer = Standardizer::fit(rows.iter().map(|r| r.as_slice()));
        Self {
            k: k.max(1),
            points: rows.iter().map(|r| standardizer.apply(r)).collect(),
            labels: labels.to_vec(),
            standardizer,
        }
    }

    /// Majority label of the `k` nearest points and its vote fraction. A tie
    /// goes to whichever tied label owns the nearest neighbour.
    pub fn predict(&self, x: &[f64]) -> (usize, f64) {
        let z = self.standardizer.apply(x);
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (euclidean(&z, p), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(order.len());
        let nearest: Vec<usize> = order[..k].iter().map(|&(_, i)| self.labels[i]).collect();

        let mut best = (nearest[0], 0usize);
        for (rank, &lab) in nearest.iter().enumerate() {
            // first occurrence only, so earlier (closer) labels win ties
            if nearest[..rank].contains(&lab) {
                continue;
            }
            let votes = nearest.iter().filter(|&&l| l == lab).count();
            if votes > best.1 {
                best = (lab, votes);
            }
        }
        (best.0, best.1 as f64 / k as f64)
    }
}

//! Spline augmentation of small clusters.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{covariance, to_matrix};
use crate::spline::CubicSpline;

/// Returns `points` followed by synthetic points sampled from a per-coordinate
/// natural spline through the points ordered along their first principal
/// axis. Midpoints are inserted between every pair of neighbouring
/// parameters, a full round at a time, until there are at least `target`.
pub fn augment_cluster(points: &[Vec<f64>], target: usize) -> Result<Vec<Vec<f64>>> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut out = points.to_vec();
    if points.len() >= target {
        return Ok(out);
    }
    let d = points[0].len();

    let eig = SymmetricEigen::new(covariance(&to_matrix(points)));
    let top = (0..d)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap();
    let axis = eig.eigenvectors.column(top);
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(axis.iter()).map(|(a, b)| a * b).sum(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // arc-length knots, skipping repeated points
    let mut knots: Vec<f64> = vec![0.0];
    let mut knot_pts: Vec<&Vec<f64>> = vec![&points[order[0].1]];
    for &(_, i) in &order[1..] {
        let step = crate::linalg::euclidean(&points[i], knot_pts.last().unwrap());
        if step > 0.0 {
            knots.push(knots.last().unwrap() + step);
            knot_pts.push(&points[i]);
        }
    }
    if knots.len() < 2 {
        out.resize(target, points[0].clone());
        return Ok(out);
    }
    let splines: Vec<CubicSpline> = (0..d)
        .map(|k| {
            let ys: Vec<f64> = knot_pts.iter().map(|p| p[k]).collect();
            CubicSpline::natural(&knots, &ys)
        })
        .collect();

    let mut params = knots;
    while out.len() < target {
        let mids: Vec<f64> = params.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        for &t in &mids {
            out.push(splines.iter().map(|s| s.eval(t)).collect());
        }
        params.extend(mids);
        params.sort_by(f64::total_cmp);
    }
    Ok(out)
}

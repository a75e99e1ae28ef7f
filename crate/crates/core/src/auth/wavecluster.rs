//! Grid clustering with one level of Haar smoothing.
//!
//! Points are binned on a regular grid spanning their bounding box, cell
//! counts are low-passed along each axis, dense cells are kept and their
//! face-connected components become clusters.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grids are at most three-dimensional; extra coordinates are ignored.
pub const MAX_GRID_DIMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveClusterConfig {
    pub cells_per_dim: usize,
    /// Absolute density threshold on smoothed counts. `None` uses
    /// `threshold_factor` times the mean nonzero smoothed count.
    pub density_threshold: Option<f64>,
    pub threshold_factor: f64,
    /// Fraction of the bounding-box span added on each side.
    pub margin: f64,
    /// Points in dropped cells join the nearest kept cell within this many
    /// cells (Chebyshev), otherwise they are outliers.
    pub reach_cells: usize,
    /// Caps the grid at this many cells per point so small samples in two
    /// or three dimensions are not scattered over empty cells.
    pub max_cells_per_point: f64,
}

impl Default for WaveClusterConfig {
    fn default() -> Self {
        Self {
            cells_per_dim: 32,
            density_threshold: None,
            threshold_factor: 1.5,
            margin: 0.05,
            reach_cells: 2,
            max_cells_per_point: 3.0,
        }
    }
}

struct Grid {
    dims: usize,
    g: usize,
}

impl Grid {
    fn len(&self) -> usize {
        self.g.pow(self.dims as u32)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.g + i)
    }

    fn unflat(&self, mut f: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims];
        for k in (0..self.dims).rev() {
            idx[k] = f % self.g;
            f /= self.g;
        }
        idx
    }

    fn stride(&self, axis: usize) -> usize {
        self.g.pow((self.dims - 1 - axis) as u32)
    }
}

/// Smooths along every axis with the average of the two half-cell-shifted
/// Haar approximations, i.e. the kernel `[1/4, 1/2, 1/4]`.
fn haar_smooth(counts: &[f64], grid: &Grid) -> Vec<f64> {
    let mut cur = counts.to_vec();
    for axis in 0..grid.dims {
        let s = grid.stride(axis);
        let mut next = vec![0.0; cur.len()];
        for (f, out) in next.iter_mut().enumerate() {
            let i = (f / s) % grid.g;
            let mut v = 0.5 * cur[f];
            if i > 0 {
                v += 0.25 * cur[f - s];
            }
            if i + 1 < grid.g {
                v += 0.25 * cur[f + s];
            }
            *out = v;
        }
        cur = next;
    }
    cur
}

/// Cluster label per point; `None` marks an outlier. Labels are numbered by
/// the first kept cell of each component in row-major order.
pub fn wavecluster(points: &[Vec<f64>], cfg: &WaveClusterConfig) -> Result<Vec<Option<usize>>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dims = points[0].len().min(MAX_GRID_DIMS);
    if dims == 0 {
        return Ok(vec![Some(0); points.len()]);
    }
    let cap = (cfg.max_cells_per_point * points.len() as f64)
        .powf(1.0 / dims as f64)
        .floor() as usize;
    let grid = Grid {
        dims,
        g: cfg.cells_per_dim.min(cap.max(4)).max(1),
    };

    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for p in points {
        for k in 0..dims {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut origin = vec![0.0; dims];
    let mut width = vec![0.0; dims];
    for k in 0..dims {
        let span = if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 };
        origin[k] = lo[k] - cfg.margin * span;
        width[k] = span * (1.0 + 2.0 * cfg.margin);
    }
    let cell_of = |p: &[f64]| -> Vec<usize> {
        (0..dims)
            .map(|k| {
                let c = ((p[k] - origin[k]) / width[k] * grid.g as f64).floor();
                (c.max(0.0) as usize).min(grid.g - 1)
            })
            .collect()
    };
    let cells: Vec<Vec<usize>> = points.iter().map(|p| cell_of(p)).collect();

    let mut counts = vec![0.0; grid.len()];
    for c in &cells {
        counts[grid.flat(c)] += 1.0;
    }
    let smooth = haar_smooth(&counts, &grid);

    let threshold = match cfg.density_threshold {
        Some(t) => t,
        None => {
            let nz: Vec<f64> = smooth.iter().copied().filter(|&v| v > 0.0).collect();
            let mean = nz.iter().sum::<f64>() / nz.len() as f64;
            let max = nz.iter().copied().fold(0.0, f64::max);
            // never drop every cell
            (cfg.threshold_factor * mean).min(max)
        }
    };
    let kept: Vec<bool> = smooth.iter().map(|&v| v > 0.0 && v >= threshold).collect();

    let mut comp = vec![usize::MAX; grid.len()];
    let mut n_comp = 0;
    for start in 0..grid.len() {
        if !kept[start] || comp[start] != usize::MAX {
            continue;
        }
        comp[start] = n_comp;
        let mut queue = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            let idx = grid.unflat(f);
            for axis in 0..dims {
                let s = grid.stride(axis);
                let mut nbrs = vec![];
                if idx[axis] > 0 {
                    nbrs.push(f - s);
                }
                if idx[axis] + 1 < grid.g {
                    nbrs.push(f + s);
                }
                for nb in nbrs {
                    if kept[nb] && comp[nb] == usize::MAX {
                        comp[nb] = n_comp;
                        queue.push_back(nb);
                    }
                }
            }
        }
        n_comp += 1;
    }

    let reach = cfg.reach_cells as isize;
    let labels = cells
        .iter()
        .map(|c| {
            let f = grid.flat(c);
            if kept[f] {
                return Some(comp[f]);
            }
            let mut best: Option<(isize, usize)> = None;
            let side = (2 * reach + 1) as usize;
            for o in 0..side.pow(dims as u32) {
                let mut rem = o;
                let mut nb = Vec::with_capacity(dims);
                let mut d2 = 0;
                let mut inside = true;
                for k in 0..dims {
                    let off = (rem % side) as isize - reach;
                    rem /= side;
                    let v = c[k] as isize + off;
                    if v < 0 || v >= grid.g as isize {
                        inside = false;
                        break;
                    }
                    d2 += off * off;
                    nb.push(v as usize);
                }
                if !inside {
                    continue;
                }
                let nf = grid.flat(&nb);
                if kept[nf] && best.is_none_or(|(bd, bf)| (d2, nf) < (bd, bf)) {
                    best = Some((d2, nf));
                }
            }
            best.map(|(_, nf)| comp[nf])
        })
        .collect();
    Ok(labels)
}

/// Number of distinct non-outlier labels.
pub fn cluster_count(labels: &[Option<usize>]) -> usize {
    let mut v: Vec<usize> = labels.iter().flatten().copied().collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

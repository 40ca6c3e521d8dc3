use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fpca::{eigen_fpca, reconstruct_from_eigen};
use crate::linalg::symmetrize;
use crate::model::{FunctionalDataset, Layout};

/// Sample covariance of centered dense curves.
pub fn naive_dense_covariance(data: &FunctionalDataset) -> Result<DMatrix<f64>> {
    match &data.layout {
        Layout::Dense { y, .. } => {
            let n = y.nrows();
            if n < 2 {
                return Err(Error::InsufficientData("need two curves".into()));
            }
            Ok(symmetrize(&(y.transpose() * y / (n - 1) as f64)))
        }
        Layout::Sparse { .. } => Err(Error::Validation("dense layout required".into())),
    }
}

/// Rank-K truncation Σ_{k≤K} λ_k φ_k φ_k' of a covariance on a grid.
pub fn rank_k_covariance(cov: &DMatrix<f64>, grid: &[f64], k: usize) -> Result<DMatrix<f64>> {
    Ok(reconstruct_from_eigen(&eigen_fpca(cov, grid, k)?))
}

fn nearest_node(grid: &[f64], t: f64) -> usize {
    let pos = grid.partition_point(|&g| g < t);
    if pos == 0 {
        0
    } else if pos >= grid.len() {
        grid.len() - 1
    } else if (t - grid[pos - 1]) <= (grid[pos] - t) {
        pos - 1
    } else {
        pos
    }
}

/// Pooled raw covariances of centered sparse curves binned to the nearest grid node;
/// empty cells take the value of the nearest filled cell.
pub fn naive_sparse_covariance(data: &FunctionalDataset, grid: &[f64]) -> Result<DMatrix<f64>> {
    let curves = match &data.layout {
        Layout::Sparse { curves } => curves,
        Layout::Dense { .. } => return Err(Error::Validation("sparse layout required".into())),
    };
    let g = grid.len();
    let mut sum = DMatrix::<f64>::zeros(g, g);
    let mut count = DMatrix::<f64>::zeros(g, g);
    for c in curves {
        let bins: Vec<usize> = c.times.iter().map(|&t| nearest_node(grid, t)).collect();
        for a in 0..bins.len() {
            for b in 0..bins.len() {
                sum[(bins[a], bins[b])] += c.values[a] * c.values[b];
                count[(bins[a], bins[b])] += 1.0;
            }
        }
    }
    let filled: Vec<(usize, usize)> = (0..g)
        .flat_map(|i| (0..g).map(move |j| (i, j)))
        .filter(|&(i, j)| count[(i, j)] > 0.0)
        .collect();
    if filled.is_empty() {
        return Err(Error::InsufficientData("no observations to bin".into()));
    }
    let mut out = DMatrix::zeros(g, g);
    for i in 0..g {
        for j in 0..g {
            if count[(i, j)] > 0.0 {
                out[(i, j)] = sum[(i, j)] / count[(i, j)];
            } else {
                let &(a, b) = filled
                    .iter()
                    .min_by_key(|&&(a, b)| a.abs_diff(i) + b.abs_diff(j))
                    .unwrap();
                out[(i, j)] = sum[(a, b)] / count[(a, b)];
            }
        }
    }
    Ok(symmetrize(&out))
}

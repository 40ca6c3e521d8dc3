use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::data::{FunctionalDataset, Layout, SparseCurve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: Option<f64>,
}

const MEAN_GRID_POINTS: usize = 101;

/// Subtract the estimated mean function: pointwise mean on a common grid, a
/// local-linear smoother of the pooled scatter otherwise.
pub fn detrend(data: &FunctionalDataset) -> Result<(FunctionalDataset, MeanEstimate)> {
    if data.total_obs() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} pooled observations, at least 10 needed",
            data.total_obs()
        )));
    }
    match &data.layout {
        Layout::Dense { grid, y } => {
            let n = y.nrows() as f64;
            let mean: Vec<f64> = (0..y.ncols()).map(|j| y.column(j).sum() / n).collect();
            let centered = DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] - mean[j]);
            let out = FunctionalDataset {
                ids: data.ids.clone(),
                layout: Layout::Dense { grid: grid.clone(), y: centered },
                domain: data.domain,
            };
            Ok((out, MeanEstimate { grid: grid.clone(), values: mean, bandwidth: None }))
        }
        Layout::Sparse { curves } => {
            let mut pooled: Vec<(f64, f64)> = curves
                .iter()
                .flat_map(|c| c.times.iter().copied().zip(c.values.iter().copied()))
                .collect();
            pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let h = select_bandwidth(&pooled);
            let centered = curves
                .iter()
                .map(|c| SparseCurve {
                    times: c.times.clone(),
                    values: c
                        .times
                        .iter()
                        .zip(&c.values)
                        .map(|(&t, &v)| v - local_linear(&pooled, t, h, None))
                        .collect(),
                })
                .collect();
            let (a, b) = data.domain;
            let grid: Vec<f64> = (0..MEAN_GRID_POINTS)
                .map(|j| a + (b - a) * j as f64 / (MEAN_GRID_POINTS - 1) as f64)
                .collect();
            let values = grid.iter().map(|&t| local_linear(&pooled, t, h, None)).collect();
            let out = FunctionalDataset {
                ids: data.ids.clone(),
                layout: Layout::Sparse { curves: centered },
                domain: data.domain,
            };
            Ok((out, MeanEstimate { grid, values, bandwidth: Some(h) }))
        }
    }
}

/// Silverman's rule on the pooled times.
pub fn silverman_bandwidth(times: &[f64]) -> f64 {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let sd = (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut s: Vec<f64> = times.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let pos = p * (n - 1.0);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(s.len() - 1);
        s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Silverman's bandwidth oversmooths oscillating means, so the final bandwidth is
/// chosen by leave-one-out cross-validation among fractions of it.
fn select_bandwidth(pooled: &[(f64, f64)]) -> f64 {
    let times: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    let base = silverman_bandwidth(&times);
    let stride = (pooled.len() / 2000).max(1);
    let mut best = (f64::INFINITY, base);
    for frac in [1.0, 0.7, 0.5, 0.35, 0.25, 0.18, 0.125] {
        let h = base * frac;
        let mut sse = 0.0;
        for idx in (0..pooled.len()).step_by(stride) {
            let fit = local_linear(pooled, pooled[idx].0, h, Some(idx));
            sse += (pooled[idx].1 - fit).powi(2);
        }
        if sse < best.0 {
            best = (sse, h);
        }
    }
    best.1
}

/// Local-linear estimate at `t0` with a Gaussian kernel; `skip` leaves one point out.
pub fn local_linear(pooled: &[(f64, f64)], t0: f64, h: f64, skip: Option<usize>) -> f64 {
    let (mut s0, mut s1, mut s2, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &(t, y)) in pooled.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let u = (t - t0) / h;
        if u.abs() > 8.0 {
            continue;
        }
        let k = (-0.5 * u * u).exp();
        let d = t - t0;
        s0 += k;
        s1 += k * d;
        s2 += k * d * d;
        r0 += k * y;
        r1 += k * d * y;
    }
    let det = s0 * s2 - s1 * s1;
    if det > 1e-12 * s0 * s2.max(1e-300) && s0 > 0.0 {
        (s2 * r0 - s1 * r1) / det
    } else if s0 > 0.0 {
        r0 / s0
    } else {
        // no support within 8 bandwidths: nearest observation
        pooled
            .iter()
            .min_by(|a, b| (a.0 - t0).abs().partial_cmp(&(b.0 - t0).abs()).unwrap())
            .map(|p| p.1)
            .unwrap_or(0.0)
    }
}

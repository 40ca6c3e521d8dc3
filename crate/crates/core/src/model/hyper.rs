use serde::{Deserialize, Serialize};

use super::data::{FunctionalDataset, Layout};
use crate::error::{Error, Result};

/// Σ-prior settings for one block of measurements sharing a Σ matrix
/// (the whole grid for dense data, a single curve for sparse data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupHyper {
    /// 2r, the Wishart degrees of freedom of the Σ⁻¹ prior.
    pub two_r: f64,
    /// Squared data ranges R per coordinate.
    pub r_diag: Vec<f64>,
}

impl GroupHyper {
    /// κ = 100 R⁻¹ / (2r).
    pub fn kappa(&self) -> Vec<f64> {
        self.r_diag.iter().map(|r| 100.0 / (r * self.two_r)).collect()
    }

    /// Diagonal of (2κ)⁻¹, the inverse scale of the Σ⁻¹ prior.
    pub fn inv_scale_diag(&self) -> Vec<f64> {
        self.kappa().iter().map(|k| 1.0 / (2.0 * k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// ν; the Ω⁻¹ prior is Wishart(ν + 1, L_K⁻¹), matching the conditional
    /// Wishart(ν + n + 1, ·) used by the sampler.
    pub nu: f64,
    /// Prior variance of each skewness coefficient in D.
    pub gamma_diag: f64,
    pub h_r: Option<usize>,
    pub groups: Vec<GroupHyper>,
}

impl Hyperparameters {
    pub fn omega_prior_df(&self) -> f64 {
        self.nu + 1.0
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.nu > k as f64 - 1.0) {
            return Err(Error::Validation(format!("nu = {} must exceed K - 1 = {}", self.nu, k as f64 - 1.0)));
        }
        if !(self.gamma_diag > 0.0) {
            return Err(Error::Validation("gamma_diag must be positive".into()));
        }
        for g in &self.groups {
            if g.r_diag.iter().any(|&r| !(r > 0.0)) {
                return Err(Error::DegenerateRange("squared range must be positive".into()));
            }
            if !(g.two_r > g.r_diag.len() as f64 - 1.0) {
                return Err(Error::InvalidDf { df: g.two_r, dim: g.r_diag.len() });
            }
        }
        Ok(())
    }
}

pub fn default_h_r(n: usize) -> usize {
    ((0.05 * n as f64).ceil() as usize).max(5)
}

/// Squared ranges floored at 1e-6 of the squared global range.
fn floor_ranges(groups: &mut [GroupHyper], global_range: f64) -> Result<()> {
    let floor = 1e-6 * global_range * global_range;
    if !(floor > 0.0) {
        return Err(Error::DegenerateRange("all observations are identical".into()));
    }
    let mut floored = 0;
    for g in groups.iter_mut() {
        for r in g.r_diag.iter_mut() {
            if *r < floor {
                *r = floor;
                floored += 1;
            }
        }
    }
    if floored > 0 {
        log::warn!("{floored} zero squared ranges floored at {floor:e}");
    }
    Ok(())
}

pub fn derive_hyperparameters(data: &FunctionalDataset, k: usize) -> Result<Hyperparameters> {
    let nu = 2.0 * k as f64;
    match &data.layout {
        Layout::Dense { grid, y } => {
            let m = grid.len();
            let r_diag: Vec<f64> = (0..m)
                .map(|j| {
                    let col = y.column(j);
                    (col.max() - col.min()).powi(2)
                })
                .collect();
            let global = y.max() - y.min();
            let mut groups = vec![GroupHyper { two_r: m as f64, r_diag }];
            floor_ranges(&mut groups, global)?;
            Ok(Hyperparameters { nu, gamma_diag: 10.0, h_r: None, groups })
        }
        Layout::Sparse { curves } => {
            let h = default_h_r(curves.len());
            let mut pooled: Vec<(f64, f64)> = curves
                .iter()
                .flat_map(|c| c.times.iter().copied().zip(c.values.iter().copied()))
                .collect();
            pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let times: Vec<f64> = pooled.iter().map(|p| p.0).collect();
            let (mut lo_all, mut hi_all) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &pooled {
                lo_all = lo_all.min(p.1);
                hi_all = hi_all.max(p.1);
            }
            let mut groups: Vec<GroupHyper> = curves
                .iter()
                .map(|c| GroupHyper {
                    two_r: c.times.len() as f64,
                    r_diag: c.times.iter().map(|&t| nearest_range(&pooled, &times, t, h).powi(2)).collect(),
                })
                .collect();
            floor_ranges(&mut groups, hi_all - lo_all)?;
            Ok(Hyperparameters { nu, gamma_diag: 10.0, h_r: Some(h), groups })
        }
    }
}

/// Range of the values of the `h` pooled observations nearest to `t` in time.
fn nearest_range(pooled: &[(f64, f64)], times: &[f64], t: f64, h: usize) -> f64 {
    let h = h.min(pooled.len());
    let pos = times.partition_point(|&x| x < t);
    let (mut left, mut right) = (pos, pos); // window [left, right)
    while right - left < h {
        let take_left = if left == 0 {
            false
        } else if right == pooled.len() {
            true
        } else {
            (t - times[left - 1]) <= (times[right] - t)
        };
        if take_left {
            left -= 1;
        } else {
            right += 1;
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &pooled[left..right] {
        lo = lo.min(p.1);
        hi = hi.max(p.1);
    }
    hi - lo
}

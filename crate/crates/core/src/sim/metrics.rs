use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Frobenius distance between covariance surfaces; with `cell_area` the squared
/// entries are weighted by Δs·Δt, otherwise the grid is treated as index space.
pub fn metric_l2_cov<T: Real>(est: &DMatrix<T>, truth: &DMatrix<T>, cell_area: Option<T>) -> Result<T> {
    if est.shape() != truth.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", est.shape(), truth.shape())));
    }
    let f = (est - truth).norm();
    Ok(match cell_area {
        Some(a) => f * a.sqrt(),
        None => f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcErrorKind {
    Mse,
    Angle,
}

/// Error between two eigenfunction estimates after unit normalization and sign alignment.
pub fn metric_pc_error<T: Real>(est: &DVector<T>, truth: &DVector<T>, kind: PcErrorKind) -> Result<T> {
    if est.len() != truth.len() {
        return Err(Error::DimensionMismatch("pc vectors differ in length".into()));
    }
    let (ne, nt) = (est.norm(), truth.norm());
    if !(ne > T::zero()) || !(nt > T::zero()) {
        return Err(Error::ZeroVector);
    }
    let e = est / ne;
    let t = truth / nt;
    let inner = e.dot(&t);
    Ok(match kind {
        PcErrorKind::Mse => {
            let aligned = if inner < T::zero() { -e } else { e };
            (aligned - t).norm_squared() / lit::<T>(truth.len() as f64)
        }
        PcErrorKind::Angle => inner.abs().min(T::one()).acos(),
    })
}

/// Correlation surface of a covariance matrix; nonpositive variances are floored.
pub fn correlation<T: Real>(cov: &DMatrix<T>) -> DMatrix<T> {
    let g = cov.nrows();
    let tiny = lit::<T>(1e-300);
    let sd: Vec<T> = (0..g).map(|i| cov[(i, i)].max(tiny).sqrt()).collect();
    DMatrix::from_fn(g, g, |i, j| cov[(i, j)] / (sd[i] * sd[j]))
}

/// Bilinear re-evaluation of a surface on another grid.
pub fn resample_surface(surface: &DMatrix<f64>, from: &[f64], to: &[f64]) -> DMatrix<f64> {
    let g = to.len();
    DMatrix::from_fn(g, g, |i, j| crate::fpca::interp_bilinear(from, surface, to[i], to[j]))
}

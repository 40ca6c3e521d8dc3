//! Robust Mahalanobis outlier detection on FPC scores.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asmc::AsmcRun;
use crate::dist::chi2_quantile;
use crate::error::{Error, Result};
use crate::fpca::{eigen_fpca, score_data};
use crate::gibbs::FpcaModel;
use crate::linalg::{symmetrize, trace};
use crate::model::{FunctionalDataset, ParticleState};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct RobustEstimate<T: Real> {
    pub location: DVector<T>,
    pub scatter: DMatrix<T>,
    pub iterations: usize,
    /// A ridge had to be added to a rank-deficient scatter.
    pub ridged: bool,
}

fn median<T: Real>(v: &mut [T]) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * lit::<T>(0.5)
    }
}

fn ensure_spd<T: Real>(s: &DMatrix<T>, ridged: &mut bool) -> DMatrix<T> {
    let s = symmetrize(s);
    let k = s.nrows();
    let ok = nalgebra::Cholesky::new(s.clone())
        .map(|c| {
            let l = c.l_dirty();
            let (mut lo, mut hi) = (l[(0, 0)], l[(0, 0)]);
            for i in 0..k {
                lo = lo.min(l[(i, i)]);
                hi = hi.max(l[(i, i)]);
            }
            lo > hi * lit::<T>(1e-7)
        })
        .unwrap_or(false);
    if ok {
        return s;
    }
    let tr = trace(&s);
    let ridge = if tr > T::zero() { lit::<T>(1e-8) * tr / lit::<T>(k as f64) } else { lit::<T>(1e-8) };
    if !*ridged {
        log::warn!("rank-deficient scatter; ridge {:e} added", to_f64(ridge));
    }
    *ridged = true;
    let mut out = s;
    for i in 0..k {
        out[(i, i)] += ridge;
    }
    out
}

/// Squared Mahalanobis distances of each row.
fn squared_distances<T: Real>(x: &DMatrix<T>, loc: &DVector<T>, scatter: &DMatrix<T>) -> Result<Vec<T>> {
    let chol = nalgebra::Cholesky::new(symmetrize(scatter))
        .ok_or_else(|| Error::NonSpdMatrix("scatter matrix".into()))?;
    let l = chol.l();
    let mut out = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let d = x.row(i).transpose() - loc;
        let z = l
            .solve_lower_triangular(&d)
            .ok_or_else(|| Error::NonSpdMatrix("scatter factor".into()))?;
        out.push(z.norm_squared());
    }
    Ok(out)
}

pub fn mahalanobis_distances<T: Real>(scores: &DMatrix<T>, location: &DVector<T>, scatter: &DMatrix<T>) -> Result<DVector<T>> {
    let d2 = squared_distances(scores, location, scatter)?;
    Ok(DVector::from_iterator(d2.len(), d2.into_iter().map(|v| v.max(T::zero()).sqrt())))
}

pub fn classical_location_scatter<T: Real>(scores: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = scores.nrows();
    let k = scores.ncols();
    let nf = lit::<T>(n as f64);
    let loc = DVector::from_fn(k, |c, _| scores.column(c).sum() / nf);
    let mut s = DMatrix::zeros(k, k);
    for i in 0..n {
        let d = scores.row(i).transpose() - &loc;
        s += &d * d.transpose();
    }
    (loc, s / lit::<T>((n.max(2) - 1) as f64))
}

/// Median/MAD start followed by iteratively reweighted Tukey-bisquare M-estimation
/// with cutoff √χ²_K(0.975); the scatter is rescaled each step so the median squared
/// distance matches χ²_K(0.5).
pub fn robust_location_scatter<T: Real>(scores: &DMatrix<T>) -> Result<RobustEstimate<T>> {
    let n = scores.nrows();
    let k = scores.ncols();
    if k == 0 || n <= k + 1 {
        return Err(Error::InsufficientData(format!("robust estimation needs n > K + 1 (n = {n}, K = {k})")));
    }
    let kf = k as f64;
    let cutoff = lit::<T>(chi2_quantile(kf, 0.975)?.sqrt());
    let chi_med = lit::<T>(chi2_quantile(kf, 0.5)?);
    let mut ridged = false;
    let mut loc = DVector::zeros(k);
    let mut scatter = DMatrix::zeros(k, k);
    for c in 0..k {
        let mut col: Vec<T> = scores.column(c).iter().copied().collect();
        let med = median(&mut col);
        let mut dev: Vec<T> = col.iter().map(|&v| (v - med).abs()).collect();
        let mad = median(&mut dev) * lit::<T>(1.482_602_218_505_602);
        loc[c] = med;
        scatter[(c, c)] = mad * mad;
    }
    scatter = ensure_spd(&scatter, &mut ridged);
    let mut iterations = 0;
    for it in 1..=100 {
        iterations = it;
        let d2 = squared_distances(scores, &loc, &scatter)?;
        let weights: Vec<T> = d2
            .iter()
            .map(|&v| {
                let u = v.sqrt() / cutoff;
                if u < T::one() {
                    let t = T::one() - u * u;
                    t * t
                } else {
                    T::zero()
                }
            })
            .collect();
        let wsum = weights.iter().fold(T::zero(), |a, &b| a + b);
        if !(wsum > T::zero()) {
            break;
        }
        let mut new_loc = DVector::zeros(k);
        for i in 0..n {
            new_loc += scores.row(i).transpose() * weights[i];
        }
        new_loc /= wsum;
        let mut new_scatter = DMatrix::zeros(k, k);
        for i in 0..n {
            if weights[i] > T::zero() {
                let d = scores.row(i).transpose() - &new_loc;
                new_scatter += &d * d.transpose() * weights[i];
            }
        }
        new_scatter /= wsum;
        new_scatter = ensure_spd(&new_scatter, &mut ridged);
        let mut d2_new = squared_distances(scores, &new_loc, &new_scatter)?;
        let factor = median(&mut d2_new) / chi_med;
        if factor > T::zero() && factor.is_finite() {
            new_scatter *= factor;
            new_scatter = ensure_spd(&new_scatter, &mut ridged);
        }
        let change = (&new_loc - &loc).norm() + (&new_scatter - &scatter).norm();
        let size = loc.norm() + scatter.norm() + lit::<T>(1e-300);
        loc = new_loc;
        scatter = new_scatter;
        if change <= size * lit::<T>(1e-8) {
            break;
        }
    }
    Ok(RobustEstimate { location: loc, scatter, iterations, ridged })
}

/// Flags d_i² > χ²_K(level); returns the flags and the threshold on d².
pub fn flag_outliers<T: Real>(distances: &DVector<T>, k: usize, level: f64) -> Result<(Vec<bool>, f64)> {
    let threshold = chi2_quantile(k as f64, level)?;
    let flags = distances.iter().map(|&d| to_f64(d) * to_f64(d) > threshold).collect();
    Ok((flags, threshold))
}

/// Indices of the `k` largest distances, most outlying first.
pub fn top_k<T: Real>(distances: &DVector<T>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..distances.len()).collect();
    idx.sort_by(|&a, &b| distances[b].partial_cmp(&distances[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub ids: Vec<String>,
    pub distances: Vec<f64>,
    pub threshold: Option<f64>,
    pub level: Option<f64>,
    pub flags: Vec<bool>,
    pub probabilities: Option<Vec<f64>>,
    pub location: Vec<f64>,
    /// Row-major K × K.
    pub scatter: Vec<f64>,
    /// Curve indices ordered by decreasing distance (top-k mode).
    pub ranking: Option<Vec<usize>>,
}

/// Robust distances of score rows, flagged at `level`.
pub fn detect(ids: &[String], scores: &DMatrix<f64>, level: f64) -> Result<OutlierReport> {
    let est = robust_location_scatter(scores)?;
    let d = mahalanobis_distances(scores, &est.location, &est.scatter)?;
    let (flags, threshold) = flag_outliers(&d, scores.ncols(), level)?;
    Ok(OutlierReport {
        ids: ids.to_vec(),
        distances: d.iter().copied().collect(),
        threshold: Some(threshold),
        level: Some(level),
        flags,
        probabilities: None,
        location: est.location.iter().copied().collect(),
        scatter: est.scatter.transpose().iter().copied().collect(),
        ranking: None,
    })
}

/// Flags of one particle: its covariance, eigenfunctions, scores and robust distances.
pub fn particle_flags(
    model: &FpcaModel,
    state: &ParticleState,
    centered: &FunctionalDataset,
    level: f64,
) -> Result<Vec<bool>> {
    let cov = model.basis.reconstruct(&model.eval_h, &model.omega_effective(state)?);
    let eigen = eigen_fpca(&cov, &model.eval_grid, model.k())?;
    let noise = if centered.is_sparse() {
        Some((0..model.n()).map(|i| model.noise_cov(state, i)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let scores = score_data(centered, &cov, &model.eval_grid, &eigen, noise.as_deref())?;
    let est = robust_location_scatter(&scores)?;
    let d = mahalanobis_distances(&scores, &est.location, &est.scatter)?;
    Ok(flag_outliers(&d, model.k(), level)?.0)
}

/// Weighted fraction of particles that flag each curve.
pub fn outlier_probability(
    run: &AsmcRun<ParticleState>,
    model: &FpcaModel,
    centered: &FunctionalDataset,
    level: f64,
) -> Result<Vec<f64>> {
    let mut prob = vec![0.0; model.n()];
    for (p, &w) in run.particles.iter().zip(&run.weights) {
        if w == 0.0 {
            continue;
        }
        for (acc, f) in prob.iter_mut().zip(particle_flags(model, p, centered, level)?) {
            if f {
                *acc += w;
            }
        }
    }
    Ok(prob)
}

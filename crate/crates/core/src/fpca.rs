//! Posterior covariance summaries, eigenfunctions and FPC scores.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asmc::AsmcRun;
use crate::error::{Error, Result};
use crate::gibbs::FpcaModel;
use crate::linalg::{cholesky_jitter, sym_eigen_desc, symmetrize, trace, trapezoid_weights};
use crate::model::{FunctionalDataset, Layout, MeanEstimate, ParticleState};
use crate::scalar::{lit, Real};

/// Leading eigenpairs of a covariance operator on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFpca<T: Real> {
    pub values: DVector<T>,
    /// g × K, columns with unit trapezoid norm.
    pub functions: DMatrix<T>,
}

/// Positive quadrature integral, or a positive first extremum when the integral vanishes.
pub fn canonicalize_sign<T: Real>(phi: &mut DVector<T>, weights: &DVector<T>) {
    let integral = phi.dot(weights);
    let scale = phi.iter().zip(weights.iter()).fold(T::zero(), |acc, (&p, &w)| acc + p.abs() * w);
    let flip = if integral.abs() > scale * lit::<T>(1e-10) {
        integral < T::zero()
    } else {
        let mut best = 0;
        for j in 1..phi.len() {
            if phi[j].abs() > phi[best].abs() {
                best = j;
            }
        }
        phi[best] < T::zero()
    };
    if flip {
        phi.neg_mut();
    }
}

/// Discretized Mercer problem with trapezoid weights W: eigenvectors of
/// W^{1/2} C W^{1/2} mapped back by W^{-1/2}.
pub fn eigen_fpca<T: Real>(cov: &DMatrix<T>, grid: &[T], k: usize) -> Result<EigenFpca<T>> {
    let g = grid.len();
    if cov.nrows() != g || cov.ncols() != g {
        return Err(Error::DimensionMismatch(format!("covariance {}x{} vs grid {g}", cov.nrows(), cov.ncols())));
    }
    if k == 0 || k > g {
        return Err(Error::Validation(format!("need 1 ≤ K ≤ {g}, got {k}")));
    }
    let w = trapezoid_weights(grid);
    let sw: DVector<T> = w.map(|x| x.sqrt());
    let scaled = DMatrix::from_fn(g, g, |i, j| sw[i] * cov[(i, j)] * sw[j]);
    let (vals, vecs) = sym_eigen_desc(&symmetrize(&scaled));
    let mut functions = DMatrix::zeros(g, k);
    for c in 0..k {
        let mut phi = DVector::from_fn(g, |i, _| vecs[(i, c)] / sw[i]);
        let norm = phi.iter().zip(w.iter()).fold(T::zero(), |acc, (&p, &wi)| acc + p * p * wi).sqrt();
        phi.unscale_mut(norm);
        canonicalize_sign(&mut phi, &w);
        functions.set_column(c, &phi);
    }
    let values = DVector::from_iterator(k, vals.iter().take(k).map(|&v| v.max(T::zero())));
    Ok(EigenFpca { values, functions })
}

/// Σ_k λ_k φ_k φ_k'.
pub fn reconstruct_from_eigen<T: Real>(e: &EigenFpca<T>) -> DMatrix<T> {
    let scaled = DMatrix::from_fn(e.functions.nrows(), e.functions.ncols(), |i, c| e.functions[(i, c)] * e.values[c]);
    &scaled * e.functions.transpose()
}

/// ξ_ik = ∫ φ_k(t) Y_i(t) dt by the trapezoid rule; `y` is n × g.
pub fn scores_dense<T: Real>(y: &DMatrix<T>, functions: &DMatrix<T>, grid: &[T]) -> Result<DMatrix<T>> {
    if y.ncols() != grid.len() || functions.nrows() != grid.len() {
        return Err(Error::DimensionMismatch("scores_dense grid".into()));
    }
    let w = trapezoid_weights(grid);
    let weighted = DMatrix::from_fn(functions.nrows(), functions.ncols(), |i, c| functions[(i, c)] * w[i]);
    Ok(y * weighted)
}

pub fn variance_explained<T: Real>(values: &DVector<T>) -> Result<DVector<T>> {
    let total = values.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(values / total)
}

fn bracket<T: Real>(grid: &[T], t: T) -> (usize, T) {
    let g = grid.len();
    if t <= grid[0] {
        return (0, T::zero());
    }
    if t >= grid[g - 1] {
        return (g - 2, T::one());
    }
    let j = grid.partition_point(|&x| x <= t).saturating_sub(1).min(g - 2);
    (j, (t - grid[j]) / (grid[j + 1] - grid[j]))
}

pub fn interp_linear<T: Real>(grid: &[T], values: &[T], t: T) -> T {
    let (j, f) = bracket(grid, t);
    values[j] * (T::one() - f) + values[j + 1] * f
}

pub fn interp_bilinear<T: Real>(grid: &[T], surface: &DMatrix<T>, s: T, t: T) -> T {
    let (i, fs) = bracket(grid, s);
    let (j, ft) = bracket(grid, t);
    let one = T::one();
    surface[(i, j)] * (one - fs) * (one - ft)
        + surface[(i + 1, j)] * fs * (one - ft)
        + surface[(i, j + 1)] * (one - fs) * ft
        + surface[(i + 1, j + 1)] * fs * ft
}

/// Conditional-expectation scores λ_k φ_k(t_i)' (Q(t_i, t_i) + Σ_i)⁻¹ y_i for one curve.
pub fn pace_scores<T: Real>(
    times: &[T],
    values: &[T],
    noise: &DMatrix<T>,
    cov: &DMatrix<T>,
    grid: &[T],
    eigen: &EigenFpca<T>,
) -> Result<DVector<T>> {
    let ni = times.len();
    let mut qy = DMatrix::from_fn(ni, ni, |a, b| interp_bilinear(grid, cov, times[a], times[b]) + noise[(a, b)]);
    qy = symmetrize(&qy);
    let (vals, _) = sym_eigen_desc(&qy);
    let cond_ok = |v: &DVector<T>| v[ni - 1] > v[0] * lit::<T>(1e-12) && v[0] > T::zero();
    if !cond_ok(&vals) {
        let mean_diag = trace(&qy) / lit::<T>(ni as f64);
        let ridge = lit::<T>(1e-8) * if mean_diag > T::zero() { mean_diag } else { T::one() };
        for a in 0..ni {
            qy[(a, a)] += ridge;
        }
        let (vals, _) = sym_eigen_desc(&qy);
        if !cond_ok(&vals) {
            return Err(Error::SingularConditioning(0));
        }
    }
    let chol = cholesky_jitter(&qy).map_err(|_| Error::SingularConditioning(0))?;
    let sol = chol.solve(&DVector::from_column_slice(values));
    let k = eigen.values.len();
    let mut out = DVector::zeros(k);
    for c in 0..k {
        let col: Vec<T> = eigen.functions.column(c).iter().copied().collect();
        let phi = DVector::from_iterator(ni, times.iter().map(|&t| interp_linear(grid, &col, t)));
        out[c] = eigen.values[c] * phi.dot(&sol);
    }
    Ok(out)
}

/// PACE scores for every sparse curve; `noise[i]` is the n_i × n_i measurement covariance.
pub fn scores_sparse<T: Real>(
    curves: &[(Vec<T>, Vec<T>)],
    noise: &[DMatrix<T>],
    cov: &DMatrix<T>,
    grid: &[T],
    eigen: &EigenFpca<T>,
) -> Result<DMatrix<T>> {
    let k = eigen.values.len();
    let mut out = DMatrix::zeros(curves.len(), k);
    for (i, ((t, y), s)) in curves.iter().zip(noise).enumerate() {
        let sc = pace_scores(t, y, s, cov, grid, eigen).map_err(|e| match e {
            Error::SingularConditioning(_) => Error::SingularConditioning(i),
            other => other,
        })?;
        out.set_row(i, &sc.transpose());
    }
    Ok(out)
}

/// Quantile `p` of values carrying the given weights.
pub fn weighted_quantile(pairs: &mut [(f64, f64)], p: f64) -> f64 {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let total: f64 = pairs.iter().map(|x| x.1).sum();
    let mut cum = 0.0;
    for &(v, w) in pairs.iter() {
        cum += w;
        if cum >= p * total - 1e-12 {
            return v;
        }
    }
    pairs.last().map(|x| x.0).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovSummary {
    pub mean: DMatrix<f64>,
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

/// Per-particle covariance surfaces H U_K Ω U_K' H' on the model's evaluation grid.
pub fn particle_surfaces(run: &AsmcRun<ParticleState>, model: &FpcaModel) -> Result<Vec<DMatrix<f64>>> {
    run.particles
        .iter()
        .map(|p| Ok(model.basis.reconstruct(&model.eval_h, &model.omega_effective(p)?)))
        .collect()
}

/// Weighted posterior mean surface with pointwise 2.5% / 97.5% bands.
pub fn posterior_covariance(run: &AsmcRun<ParticleState>, model: &FpcaModel) -> Result<CovSummary> {
    let surfaces = particle_surfaces(run, model)?;
    Ok(summarize_surfaces(&surfaces, &run.weights, 0.95))
}

pub fn summarize_surfaces(surfaces: &[DMatrix<f64>], weights: &[f64], level: f64) -> CovSummary {
    let g = surfaces[0].nrows();
    let mut mean = DMatrix::zeros(g, g);
    for (s, &w) in surfaces.iter().zip(weights) {
        mean += s * w;
    }
    let mut lower = DMatrix::zeros(g, g);
    let mut upper = DMatrix::zeros(g, g);
    let mut pairs = Vec::with_capacity(surfaces.len());
    for i in 0..g {
        for j in i..g {
            pairs.clear();
            pairs.extend(surfaces.iter().zip(weights).map(|(s, &w)| (s[(i, j)], w)));
            let lo = weighted_quantile(&mut pairs, 0.5 * (1.0 - level));
            let hi = weighted_quantile(&mut pairs, 0.5 * (1.0 + level));
            lower[(i, j)] = lo;
            lower[(j, i)] = lo;
            upper[(i, j)] = hi;
            upper[(j, i)] = hi;
        }
    }
    CovSummary { mean: symmetrize(&mean), lower, upper }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpcBands {
    /// g × K pointwise lower and upper quantiles.
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

/// Pointwise credible bands of each eigenfunction, after aligning every particle's
/// eigenfunction sign with the point estimate.
pub fn fpc_credible_bands(
    surfaces: &[DMatrix<f64>],
    weights: &[f64],
    grid: &[f64],
    reference: &EigenFpca<f64>,
    level: f64,
) -> Result<FpcBands> {
    let k = reference.values.len();
    let g = grid.len();
    let w = trapezoid_weights(grid);
    let mut per_particle = Vec::with_capacity(surfaces.len());
    for s in surfaces {
        let mut e = eigen_fpca(s, grid, k)?;
        for c in 0..k {
            let inner: f64 = (0..g).map(|j| e.functions[(j, c)] * reference.functions[(j, c)] * w[j]).sum();
            if inner < 0.0 {
                e.functions.column_mut(c).neg_mut();
            }
        }
        per_particle.push(e.functions);
    }
    let mut lower = DMatrix::zeros(g, k);
    let mut upper = DMatrix::zeros(g, k);
    let mut pairs = Vec::with_capacity(surfaces.len());
    for c in 0..k {
        for j in 0..g {
            pairs.clear();
            pairs.extend(per_particle.iter().zip(weights).map(|(f, &wt)| (f[(j, c)], wt)));
            lower[(j, c)] = weighted_quantile(&mut pairs, 0.5 * (1.0 - level));
            upper[(j, c)] = weighted_quantile(&mut pairs, 0.5 * (1.0 + level));
        }
    }
    Ok(FpcBands { lower, upper })
}

/// Weighted posterior mean of each curve's measurement covariance.
pub fn posterior_noise(run: &AsmcRun<ParticleState>, model: &FpcaModel) -> Result<Vec<DMatrix<f64>>> {
    let mut out: Vec<DMatrix<f64>> = model
        .curves
        .iter()
        .map(|c| DMatrix::zeros(c.y.len(), c.y.len()))
        .collect();
    for (p, &w) in run.particles.iter().zip(&run.weights) {
        if w == 0.0 {
            continue;
        }
        for (i, acc) in out.iter_mut().enumerate() {
            *acc += model.noise_cov(p, i)? * w;
        }
    }
    Ok(out)
}

/// Scores of centered data under a covariance surface on the model grid: quadrature
/// for dense data, conditional expectation for sparse data.
pub fn score_data(
    data: &FunctionalDataset,
    cov: &DMatrix<f64>,
    grid: &[f64],
    eigen: &EigenFpca<f64>,
    noise: Option<&[DMatrix<f64>]>,
) -> Result<DMatrix<f64>> {
    match &data.layout {
        Layout::Dense { y, grid: data_grid } => {
            if data_grid.len() != grid.len() {
                return Err(Error::DimensionMismatch("dense data and evaluation grid differ".into()));
            }
            scores_dense(y, &eigen.functions, grid)
        }
        Layout::Sparse { curves } => {
            let noise = noise.ok_or_else(|| Error::Validation("sparse scoring needs noise covariances".into()))?;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = curves.iter().map(|c| (c.times.clone(), c.values.clone())).collect();
            scores_sparse(&pairs, noise, cov, grid, eigen)
        }
    }
}

/// Serializable summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaResult {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub variant: String,
    pub log_evidence: f64,
    pub n_iterations: usize,
    pub grid: Vec<f64>,
    /// Row-major g × g.
    pub covariance: Vec<f64>,
    pub covariance_lower: Vec<f64>,
    pub covariance_upper: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// One vector of length g per component.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub eigenfunctions_lower: Vec<Vec<f64>>,
    pub eigenfunctions_upper: Vec<Vec<f64>>,
    pub var_explained: Vec<f64>,
    pub ids: Vec<String>,
    /// One vector of length K per curve.
    pub scores: Vec<Vec<f64>>,
    pub mean: MeanEstimate,
}

impl FpcaResult {
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let g = self.grid.len();
        DMatrix::from_row_slice(g, g, &self.covariance)
    }

    pub fn scores_matrix(&self) -> DMatrix<f64> {
        let k = self.eigenvalues.len();
        DMatrix::from_fn(self.scores.len(), k, |i, c| self.scores[i][c])
    }

    pub fn eigen(&self) -> EigenFpca<f64> {
        let g = self.grid.len();
        let k = self.eigenvalues.len();
        EigenFpca {
            values: DVector::from_vec(self.eigenvalues.clone()),
            functions: DMatrix::from_fn(g, k, |j, c| self.eigenfunctions[c][j]),
        }
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

pub(crate) fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|c| m.column(c).iter().copied().collect()).collect()
}

/// Covariance, eigen, score and band summaries of a completed run.
pub fn summarize_run(
    run: &AsmcRun<ParticleState>,
    model: &FpcaModel,
    centered: &FunctionalDataset,
    mean: MeanEstimate,
    seed: u64,
) -> Result<FpcaResult> {
    let k = model.k();
    let surfaces = particle_surfaces(run, model)?;
    let cov = summarize_surfaces(&surfaces, &run.weights, 0.95);
    let eigen = eigen_fpca(&cov.mean, &model.eval_grid, k)?;
    let bands = fpc_credible_bands(&surfaces, &run.weights, &model.eval_grid, &eigen, 0.95)?;
    let noise = if centered.is_sparse() { Some(posterior_noise(run, model)?) } else { None };
    let scores = score_data(centered, &cov.mean, &model.eval_grid, &eigen, noise.as_deref())?;
    let var_explained = variance_explained(&eigen.values)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; k]);
    Ok(FpcaResult {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config_hash: String::new(),
        variant: model.variant.to_string(),
        log_evidence: run.log_evidence,
        n_iterations: run.schedule.len() - 1,
        grid: model.eval_grid.clone(),
        covariance: row_major(&cov.mean),
        covariance_lower: row_major(&cov.lower),
        covariance_upper: row_major(&cov.upper),
        eigenvalues: eigen.values.iter().copied().collect(),
        eigenfunctions: columns(&eigen.functions),
        eigenfunctions_lower: columns(&bands.lower),
        eigenfunctions_upper: columns(&bands.upper),
        var_explained,
        ids: centered.ids.clone(),
        scores: (0..scores.nrows()).map(|i| scores.row(i).iter().copied().collect()).collect(),
        mean,
    })
}

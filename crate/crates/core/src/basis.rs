//! Legendre basis, prior projection and covariance reconstruction.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::matern_half_cov;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, sym_eigen_desc, symmetrize};
use crate::scalar::{lit, to_f64, Real};

/// Prior covariance kernel Ω*(s, t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorCovSpec {
    /// exp(-3 (t - s)²)
    Gauss3,
    /// exp(-(t - s)²)
    Gauss1,
    /// min(s + 1, t + 1)
    BrownianShift,
    /// (s + 1)(t + 1)
    ProductShift,
    MaternHalf { sigma2: f64, rho: f64 },
    FromFile { path: PathBuf },
}

impl PriorCovSpec {
    pub fn kernel(&self, s: f64, t: f64) -> Option<f64> {
        let d = t - s;
        Some(match self {
            PriorCovSpec::Gauss3 => (-3.0 * d * d).exp(),
            PriorCovSpec::Gauss1 => (-d * d).exp(),
            PriorCovSpec::BrownianShift => (s + 1.0).min(t + 1.0),
            PriorCovSpec::ProductShift => (s + 1.0) * (t + 1.0),
            PriorCovSpec::MaternHalf { sigma2, rho } => matern_half_cov(s, t, *sigma2, *rho),
            PriorCovSpec::FromFile { .. } => return None,
        })
    }

    pub fn name(&self) -> String {
        match self {
            PriorCovSpec::Gauss3 => "gauss3".into(),
            PriorCovSpec::Gauss1 => "gauss1".into(),
            PriorCovSpec::BrownianShift => "brownian_shift".into(),
            PriorCovSpec::ProductShift => "product_shift".into(),
            PriorCovSpec::MaternHalf { sigma2, rho } => format!("matern_half({sigma2},{rho})"),
            PriorCovSpec::FromFile { path } => format!("file:{}", path.display()),
        }
    }

    /// Ω* evaluated on `grid`, symmetrized.
    pub fn evaluate<T: Real>(&self, grid: &[T]) -> Result<DMatrix<T>> {
        let m = grid.len();
        let raw = match self {
            PriorCovSpec::FromFile { path } => {
                let g: Vec<f64> = grid.iter().map(|&x| to_f64(x)).collect();
                read_cov_csv(path, &g)?.map(|v| lit::<T>(v))
            }
            spec => DMatrix::from_fn(m, m, |i, j| {
                lit::<T>(spec.kernel(to_f64(grid[i]), to_f64(grid[j])).unwrap())
            }),
        };
        Ok(symmetrize(&raw))
    }
}

/// Square covariance CSV whose header row lists the grid times.
pub fn read_cov_csv(path: &std::path::Path, grid: &[f64]) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let header: Vec<f64> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad grid time '{s}'"))))
        .collect::<Result<_>>()?;
    if header.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "prior covariance has {} columns, working grid has {} points",
            header.len(),
            grid.len()
        )));
    }
    let span = (grid[grid.len() - 1] - grid[0]).abs().max(1.0);
    for (h, g) in header.iter().zip(grid) {
        if (h - g).abs() > 1e-8 * span {
            return Err(Error::DimensionMismatch(format!(
                "prior covariance grid time {h} does not match working grid time {g}"
            )));
        }
    }
    let m = grid.len();
    let mut out = DMatrix::zeros(m, m);
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if i >= m || rec.len() != m {
            return Err(Error::DimensionMismatch("prior covariance is not square".into()));
        }
        for (j, s) in rec.iter().enumerate() {
            let v: f64 = s.parse().map_err(|_| Error::Parse(format!("bad value '{s}'")))?;
            if !v.is_finite() {
                return Err(Error::Parse("non-finite prior covariance entry".into()));
            }
            out[(i, j)] = v;
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::DimensionMismatch("prior covariance is not square".into()));
    }
    Ok(out)
}

/// Legendre polynomials P_0..P_{p-1} at x ∈ [-1, 1].
fn legendre_row<T: Real>(x: T, p: usize, out: &mut [T]) {
    if p == 0 {
        return;
    }
    out[0] = T::one();
    if p > 1 {
        out[1] = x;
    }
    for n in 1..p.saturating_sub(1) {
        let nf = lit::<T>(n as f64);
        let a = lit::<T>((2 * n + 1) as f64);
        out[n + 1] = (a * x * out[n] - nf * out[n - 1]) / (nf + T::one());
    }
}

fn unnormalized_basis<T: Real>(times: &[T], lo: T, hi: T, p: usize) -> DMatrix<T> {
    let two = lit::<T>(2.0);
    let mut h = DMatrix::zeros(times.len(), p);
    let mut row = vec![T::zero(); p];
    for (i, &t) in times.iter().enumerate() {
        let x = two * (t - lo) / (hi - lo) - T::one();
        legendre_row(x, p, &mut row);
        for j in 0..p {
            h[(i, j)] = row[j];
        }
    }
    h
}

fn check_rank<T: Real>(h: &DMatrix<T>) -> Result<()> {
    let (vals, _) = sym_eigen_desc(&(h.transpose() * h));
    let p = vals.len();
    if p == 0 || !(vals[p - 1] > vals[0] * lit::<T>(1e-12)) {
        return Err(Error::RankDeficient(format!("basis matrix has numerical rank below {p}")));
    }
    Ok(())
}

/// Column-normalized shifted Legendre basis on `grid` (m × P).
pub fn build_basis<T: Real>(grid: &[T], p: usize) -> Result<DMatrix<T>> {
    Ok(build_basis_with_norms(grid, p)?.0)
}

fn build_basis_with_norms<T: Real>(grid: &[T], p: usize) -> Result<(DMatrix<T>, Vec<T>)> {
    let m = grid.len();
    if p == 0 || p > m {
        return Err(Error::Validation(format!("need 1 ≤ P ≤ m, got P = {p}, m = {m}")));
    }
    let (lo, hi) = grid_bounds(grid)?;
    let mut h = unnormalized_basis(grid, lo, hi, p);
    let mut norms = Vec::with_capacity(p);
    for j in 0..p {
        let n = h.column(j).norm();
        h.column_mut(j).unscale_mut(n);
        norms.push(n);
    }
    check_rank(&h)?;
    Ok((h, norms))
}

fn grid_bounds<T: Real>(grid: &[T]) -> Result<(T, T)> {
    let mut lo = grid[0];
    let mut hi = grid[0];
    for &t in grid {
        lo = lo.min(t);
        hi = hi.max(t);
    }
    if !(hi > lo) {
        return Err(Error::Validation("grid must contain distinct times".into()));
    }
    Ok((lo, hi))
}

/// First K eigenpairs of Ψ = (H'H)⁻¹H'Ω*H(H'H)⁻¹.
pub fn build_prior_projection<T: Real>(
    h: &DMatrix<T>,
    omega_star: &DMatrix<T>,
    k: usize,
) -> Result<(DMatrix<T>, DVector<T>)> {
    let p = h.ncols();
    if k == 0 || k > p {
        return Err(Error::Validation(format!("need 1 ≤ K ≤ P, got K = {k}, P = {p}")));
    }
    let hth = h.transpose() * h;
    let hth_inv = cholesky_jitter(&hth)
        .map_err(|_| Error::RankDeficient("H'H is singular".into()))?
        .inverse();
    let proj = &hth_inv * h.transpose();
    let psi = symmetrize(&(&proj * omega_star * proj.transpose()));
    let (vals, vecs) = sym_eigen_desc(&psi);
    let floor = vals[0].max(T::zero()) * lit::<T>(1e-10);
    let supported = vals.iter().filter(|&&v| v > floor).count();
    if supported < k || !(vals[0] > T::zero()) {
        return Err(Error::RankDeficient(format!(
            "prior covariance supports only {supported} components, K = {k} requested"
        )));
    }
    let u_k = vecs.columns(0, k).into_owned();
    let l_k = DVector::from_iterator(k, vals.iter().take(k).map(|&v| v.max(floor)));
    Ok((u_k, l_k))
}

/// H U_K Ω U_K' H'.
pub fn reconstruct_covariance<T: Real>(h_eval: &DMatrix<T>, u_k: &DMatrix<T>, omega: &DMatrix<T>) -> DMatrix<T> {
    let g = h_eval * u_k;
    symmetrize(&(&g * omega * g.transpose()))
}

/// Basis, prior projection and the normalization needed to evaluate the basis off-grid.
#[derive(Debug, Clone)]
pub struct BasisSystem<T: Real> {
    pub grid: Vec<T>,
    pub lo: T,
    pub hi: T,
    pub norms: Vec<T>,
    pub h: DMatrix<T>,
    pub u_k: DMatrix<T>,
    pub l_k: DVector<T>,
}

impl<T: Real> BasisSystem<T> {
    pub fn new(grid: &[T], p: usize, omega_star: &DMatrix<T>, k: usize) -> Result<Self> {
        if omega_star.nrows() != grid.len() || omega_star.ncols() != grid.len() {
            return Err(Error::DimensionMismatch("prior covariance does not match grid".into()));
        }
        let (h, norms) = build_basis_with_norms(grid, p)?;
        let (u_k, l_k) = build_prior_projection(&h, omega_star, k)?;
        let (lo, hi) = grid_bounds(grid)?;
        Ok(Self { grid: grid.to_vec(), lo, hi, norms, h, u_k, l_k })
    }

    pub fn p(&self) -> usize {
        self.h.ncols()
    }

    pub fn k(&self) -> usize {
        self.u_k.ncols()
    }

    /// Basis at arbitrary times with the normalization fixed on the construction grid.
    pub fn eval(&self, times: &[T]) -> DMatrix<T> {
        let mut h = unnormalized_basis(times, self.lo, self.hi, self.p());
        for (j, &n) in self.norms.iter().enumerate() {
            h.column_mut(j).unscale_mut(n);
        }
        h
    }

    /// Design H(t) U_K at arbitrary times.
    pub fn design(&self, times: &[T]) -> DMatrix<T> {
        self.eval(times) * &self.u_k
    }

    pub fn reconstruct(&self, h_eval: &DMatrix<T>, omega: &DMatrix<T>) -> DMatrix<T> {
        reconstruct_covariance(h_eval, &self.u_k, omega)
    }
}

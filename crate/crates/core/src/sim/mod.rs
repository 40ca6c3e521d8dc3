//! Simulation designs, generators, metrics and naive baselines.

mod baseline;
pub mod bench;
mod metrics;
mod noise;

pub use baseline::{naive_dense_covariance, naive_sparse_covariance, rank_k_covariance};
pub use metrics::{correlation, metric_l2_cov, metric_pc_error, resample_surface, PcErrorKind};
pub use noise::{sample_skew_normal, NoiseSpec};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::PriorCovSpec;
use crate::dist::{sample_mvn, std_normal};
use crate::error::{Error, Result};
use crate::fpca::{eigen_fpca, interp_linear, row_major, columns, EigenFpca};
use crate::linalg::sym_eigen_desc;
use crate::model::{FunctionalDataset, Layout, SparseCurve};
use crate::rng::{site, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Study {
    I,
    II,
    III,
    IV,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFn {
    Zero,
    /// sin(2πt)
    Sin2Pi,
    /// 10 sin(2πt) exp(-3t)
    DampedSin,
}

impl MeanFn {
    pub fn eval(self, t: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            MeanFn::Zero => 0.0,
            MeanFn::Sin2Pi => (2.0 * PI * t).sin(),
            MeanFn::DampedSin => 10.0 * (2.0 * PI * t).sin() * (-3.0 * t).exp(),
        }
    }
}

/// Latent curve family for the Gaussian-process studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Gaussian,
    /// μ + X + z + ε with z half-normal per grid point.
    SkewNormal,
    /// μ + X + z + ε/√w with w ~ Gamma(ν/2, ν/2), ν = 5.
    SkewT,
    /// Half the curves from each skew family.
    Mixture,
}

pub const SKEW_T_DF: f64 = 5.0;
/// Imposed spectrum of the Karhunen–Loève studies.
pub const KL_EIGENVALUES: [f64; 4] = [0.83, 0.08, 0.03, 0.015];
/// Mean and variance of the replaced (second, third) scores.
pub const CONTAMINATION_MEAN: [f64; 2] = [20.0, 25.0];
pub const CONTAMINATION_VAR: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    pub study: Study,
    pub n: usize,
    pub m: usize,
    pub domain: (f64, f64),
    pub mean: MeanFn,
    pub true_cov: PriorCovSpec,
    #[serde(default = "default_generator")]
    pub generator: Generator,
    pub noise: NoiseSpec,
    /// Noise for contaminated curves (study V); defaults to `noise`.
    #[serde(default)]
    pub outlier_noise: Option<NoiseSpec>,
    #[serde(default)]
    pub contamination_p: f64,
    #[serde(default)]
    pub sparsity: Option<(usize, usize)>,
    pub seed: u64,
}

fn default_generator() -> Generator {
    Generator::Gaussian
}

impl SimDesign {
    pub fn study_i(generator: Generator, noise: NoiseSpec, seed: u64) -> Self {
        SimDesign {
            study: Study::I,
            n: 20,
            m: 50,
            domain: (-1.0, 1.0),
            mean: MeanFn::Sin2Pi,
            true_cov: PriorCovSpec::BrownianShift,
            generator,
            noise,
            outlier_noise: None,
            contamination_p: 0.0,
            sparsity: None,
            seed,
        }
    }

    pub fn study_ii(true_cov: PriorCovSpec, noise: NoiseSpec, seed: u64) -> Self {
        SimDesign { study: Study::II, n: 100, true_cov, generator: Generator::Gaussian, ..Self::study_i(Generator::Gaussian, noise, seed) }
    }

    pub fn study_iii(p: f64, seed: u64) -> Self {
        SimDesign {
            study: Study::III,
            n: 100,
            m: 50,
            domain: (0.0, 1.0),
            mean: MeanFn::DampedSin,
            true_cov: PriorCovSpec::MaternHalf { sigma2: 1.0, rho: 3.0 },
            generator: Generator::Gaussian,
            noise: NoiseSpec::None,
            outlier_noise: None,
            contamination_p: p,
            sparsity: None,
            seed,
        }
    }

    pub fn study_iv(p: f64, noise: NoiseSpec, seed: u64) -> Self {
        SimDesign { study: Study::IV, noise, ..Self::study_iii(p, seed) }
    }

    /// Outlier share drawn from {5%, 10%, 15%} with equal probability.
    pub fn study_v(true_cov: PriorCovSpec, outlier_noise: NoiseSpec, seed: u64) -> Self {
        let mut rng = stream(seed, site::PRESET);
        let p = [0.05, 0.10, 0.15][rng.random_range(0..3)];
        SimDesign {
            study: Study::V,
            outlier_noise: Some(outlier_noise),
            contamination_p: p,
            sparsity: Some((5, 10)),
            ..Self::study_ii(true_cov, NoiseSpec::Normal { var: 0.3 }, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m < 2 {
            return Err(Error::Validation("need n ≥ 1 and m ≥ 2".into()));
        }
        if !(0.0..=1.0).contains(&self.contamination_p) {
            return Err(Error::Validation(format!("contamination_p = {} outside [0, 1]", self.contamination_p)));
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(Error::Validation("empty domain".into()));
        }
        if let Some((lo, hi)) = self.sparsity {
            if lo < 3 || lo > hi || hi > self.m {
                return Err(Error::Validation(format!("sparsity ({lo}, {hi}) needs 3 ≤ n_min ≤ n_max ≤ m")));
            }
        }
        if matches!(self.study, Study::III | Study::IV) && !matches!(self.true_cov, PriorCovSpec::MaternHalf { .. }) {
            return Err(Error::Validation("Karhunen–Loève studies take a matern_half covariance".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, self.m)
    }

    fn is_kl(&self) -> bool {
        matches!(self.study, Study::III | Study::IV)
    }
}

pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![lo];
    }
    (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect()
}

/// Everything needed to score an estimate against the generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub design: SimDesign,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    /// Row-major g × g.
    pub covariance: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Karhunen–Loève scores, one row per curve.
    pub kl_scores: Option<Vec<Vec<f64>>>,
    pub labels: Vec<bool>,
}

impl SimTruth {
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let g = self.grid.len();
        DMatrix::from_row_slice(g, g, &self.covariance)
    }

    pub fn eigen(&self) -> EigenFpca<f64> {
        let g = self.grid.len();
        let k = self.eigenvalues.len();
        EigenFpca {
            values: DVector::from_vec(self.eigenvalues.clone()),
            functions: DMatrix::from_fn(g, k, |j, c| self.eigenfunctions[c][j]),
        }
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.grid[1] - self.grid[0];
        h * h
    }
}

/// Matérn eigenfunctions on the grid with the imposed spectrum.
pub fn kl_truth(design: &SimDesign) -> Result<EigenFpca<f64>> {
    let grid = design.grid();
    let kernel = design.true_cov.evaluate(&grid)?;
    let mut e = eigen_fpca(&kernel, &grid, KL_EIGENVALUES.len())?;
    e.values = DVector::from_row_slice(&KL_EIGENVALUES);
    Ok(e)
}

/// m × m factor F with F F' = C, clipping negative eigenvalues.
fn gp_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_desc(cov);
    let mut f = vecs;
    for (c, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        f.column_mut(c).scale_mut(s);
    }
    f
}

/// Generate one dataset and its truth record from `design`.
pub fn generate(design: &SimDesign) -> Result<(FunctionalDataset, SimTruth)> {
    design.validate()?;
    let grid = design.grid();
    let (n, m) = (design.n, design.m);
    let mu: Vec<f64> = grid.iter().map(|&t| design.mean.eval(t)).collect();
    let mut rng = stream(design.seed, site::SIMULATE);
    let mut y = DMatrix::<f64>::zeros(n, m);

    let (truth_cov, eigen, kl_scores) = if design.is_kl() {
        let e = kl_truth(design)?;
        let k = e.values.len();
        let scores: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| std_normal(&mut rng)).collect()).collect();
        for i in 0..n {
            for j in 0..m {
                y[(i, j)] = mu[j] + kl_sum(&e, &scores[i], j);
            }
        }
        let cov = crate::fpca::reconstruct_from_eigen(&e);
        (cov, e, Some(scores))
    } else {
        let cov = design.true_cov.evaluate(&grid)?;
        let f = gp_factor(&cov);
        for i in 0..n {
            let x = &f * DVector::from_fn(m, |_, _| std_normal(&mut rng));
            for j in 0..m {
                y[(i, j)] = mu[j] + x[j];
            }
        }
        let e = eigen_fpca(&cov, &grid, 5.min(m))?;
        (cov, e, None)
    };

    let ids: Vec<String> = (0..n).map(|i| format!("c{:04}", i + 1)).collect();
    let mut truth = SimTruth {
        design: design.clone(),
        grid: grid.clone(),
        mean: mu,
        covariance: row_major(&truth_cov),
        eigenvalues: eigen.values.iter().copied().collect(),
        eigenfunctions: columns(&eigen.functions),
        kl_scores,
        labels: vec![false; n],
    };
    let mut data = FunctionalDataset::dense(ids, grid, y)?;

    let mut crng = stream(design.seed, site::CONTAMINATE);
    if design.is_kl() {
        let (d, t) = contaminate(&data, &truth, design.contamination_p, &mut crng)?;
        data = d;
        truth = t;
    } else if design.contamination_p > 0.0 {
        truth.labels = (0..n).map(|_| crng.random::<f64>() < design.contamination_p).collect();
    }

    add_noise(&mut data, design, &truth.labels, &mut rng)?;

    if let Some((lo, hi)) = design.sparsity {
        let mut srng = stream(design.seed, site::SPARSIFY);
        data = sparsify(&data, lo, hi, false, &mut srng)?;
    }
    Ok((data, truth))
}

fn kl_sum(e: &EigenFpca<f64>, scores: &[f64], j: usize) -> f64 {
    (0..e.values.len()).map(|k| e.values[k].sqrt() * scores[k] * e.functions[(j, k)]).sum()
}

fn add_noise<R: Rng + ?Sized>(data: &mut FunctionalDataset, design: &SimDesign, labels: &[bool], rng: &mut R) -> Result<()> {
    let Layout::Dense { y, .. } = &mut data.layout else {
        return Err(Error::Invariant("noise is added before sparsification".into()));
    };
    for i in 0..y.nrows() {
        let spec = match (labels[i], design.outlier_noise) {
            (true, Some(o)) => o,
            _ => design.noise,
        };
        match design.generator {
            Generator::Gaussian => {
                for j in 0..y.ncols() {
                    y[(i, j)] += spec.sample(rng);
                }
            }
            g => {
                let heavy = match g {
                    Generator::SkewT => true,
                    Generator::Mixture => rng.random::<f64>() < 0.5,
                    _ => false,
                };
                let scale = if heavy {
                    1.0 / crate::dist::sample_gamma(SKEW_T_DF / 2.0, SKEW_T_DF / 2.0, rng).sqrt()
                } else {
                    1.0
                };
                for j in 0..y.ncols() {
                    y[(i, j)] += std_normal(rng).abs() + spec.sample(rng) * scale;
                }
            }
        }
    }
    Ok(())
}

/// Replace the second and third Karhunen–Loève scores of each curve with probability
/// `p`; untouched curves are copied bit for bit.
pub fn contaminate<R: Rng + ?Sized>(
    data: &FunctionalDataset,
    truth: &SimTruth,
    p: f64,
    rng: &mut R,
) -> Result<(FunctionalDataset, SimTruth)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("p = {p} outside [0, 1]")));
    }
    let scores = truth
        .kl_scores
        .as_ref()
        .ok_or_else(|| Error::Validation("truth record has no Karhunen–Loève scores".into()))?;
    let Layout::Dense { y, grid } = &data.layout else {
        return Err(Error::Validation("contamination needs dense curves".into()));
    };
    let e = truth.eigen();
    if e.values.len() < 3 || scores.len() != y.nrows() {
        return Err(Error::DimensionMismatch("truth does not match the dataset".into()));
    }
    let cov = DMatrix::from_diagonal_element(2, 2, CONTAMINATION_VAR);
    let mean = DVector::from_row_slice(&CONTAMINATION_MEAN);
    let mut y = y.clone();
    let mut new_scores = scores.clone();
    let mut labels = truth.labels.clone();
    for i in 0..y.nrows() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let z = sample_mvn(&mean, &cov, rng)?;
        for j in 0..y.ncols() {
            let mut delta = 0.0;
            for (slot, k) in [1usize, 2].into_iter().enumerate() {
                delta += e.values[k].sqrt() * (z[slot] - scores[i][k]) * e.functions[(j, k)];
            }
            y[(i, j)] += delta;
        }
        new_scores[i][1] = z[0];
        new_scores[i][2] = z[1];
        labels[i] = true;
    }
    let mut t = truth.clone();
    t.kl_scores = Some(new_scores);
    t.labels = labels;
    let out = FunctionalDataset::dense(data.ids.clone(), grid.clone(), y)?;
    Ok((out, t))
}

/// Observe each dense curve at n_i ~ U{n_min..n_max} uniform times by linear
/// interpolation; `force_grid` keeps the grid times when n_min = n_max = m.
pub fn sparsify<R: Rng + ?Sized>(
    data: &FunctionalDataset,
    n_min: usize,
    n_max: usize,
    force_grid: bool,
    rng: &mut R,
) -> Result<FunctionalDataset> {
    let Layout::Dense { y, grid } = &data.layout else {
        return Err(Error::Validation("sparsify needs dense curves".into()));
    };
    let m = grid.len();
    if n_min < 3 || n_min > n_max || n_max > m {
        return Err(Error::Validation(format!("need 3 ≤ n_min ≤ n_max ≤ m, got ({n_min}, {n_max})")));
    }
    let (lo, hi) = data.domain;
    let mut curves = Vec::with_capacity(y.nrows());
    for i in 0..y.nrows() {
        let row: Vec<f64> = y.row(i).iter().copied().collect();
        if force_grid && n_min == m && n_max == m {
            curves.push(SparseCurve { times: grid.clone(), values: row });
            continue;
        }
        let ni = rng.random_range(n_min..=n_max);
        let mut times: Vec<f64> = Vec::with_capacity(ni);
        while times.len() < ni {
            let t = lo + (hi - lo) * rng.random::<f64>();
            if !times.contains(&t) {
                times.push(t);
            }
        }
        times.sort_by(|a, b| a.total_cmp(b));
        let values = times.iter().map(|&t| interp_linear(grid, &row, t)).collect();
        curves.push(SparseCurve { times, values });
    }
    FunctionalDataset::sparse(data.ids.clone(), curves, Some(data.domain))
}

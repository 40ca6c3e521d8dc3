mod common;

use approx::assert_relative_eq;
use common::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rbfpca::asmc::AsmcRun;
use rbfpca::fpca::{
    eigen_fpca, fpc_credible_bands, pace_scores, particle_surfaces, posterior_covariance, reconstruct_from_eigen,
    scores_dense, scores_sparse, variance_explained, weighted_quantile,
};
use rbfpca::linalg::trapezoid_weights;
use rbfpca::model::{ComponentKind, ParticleState, Variant};
use rbfpca::sim::linspace;
use rbfpca::{Eigen, Eigen32, Error, PriorCovSpec};

fn quad_norm(f: &DVector<f64>, w: &DVector<f64>) -> f64 {
    f.iter().zip(w.iter()).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
}

/// Orthonormal (under trapezoid weights) functions built from a few smooth shapes.
fn orthonormal_functions(grid: &[f64], k: usize) -> DMatrix<f64> {
    let w = trapezoid_weights(grid);
    let mut out = DMatrix::zeros(grid.len(), k);
    for c in 0..k {
        let mut f = DVector::from_iterator(grid.len(), grid.iter().map(|t| (std::f64::consts::PI * (c as f64 + 1.0) * t).sin() + 0.3 * (c as f64) * t));
        for prev in 0..c {
            let p = out.column(prev).into_owned();
            let proj: f64 = (0..grid.len()).map(|j| f[j] * p[j] * w[j]).sum();
            f -= p * proj;
        }
        let n = quad_norm(&f, &w);
        out.set_column(c, &(f / n));
    }
    out
}

#[test]
fn eigen_round_trip() {
    let grid = linspace(0.0, 1.0, 40);
    let phi = orthonormal_functions(&grid, 3);
    let lambda = [2.0, 0.7, 0.1];
    let e = Eigen { values: DVector::from_row_slice(&lambda), functions: phi.clone() };
    let cov = reconstruct_from_eigen(&e);
    let back = eigen_fpca(&cov, &grid, 3).unwrap();
    for c in 0..3 {
        assert_relative_eq!(back.values[c], lambda[c], epsilon = 1e-8);
        let dot: f64 = back.functions.column(c).dot(&phi.column(c));
        let sign = dot.signum();
        assert_relative_eq!(back.functions.column(c) * sign, phi.column(c).into_owned(), epsilon = 1e-6);
    }
    let w = trapezoid_weights(&grid);
    let gram = back.functions.transpose() * DMatrix::from_diagonal(&w) * &back.functions;
    assert_relative_eq!(gram, DMatrix::identity(3, 3), epsilon = 1e-6);
    for c in 0..3 {
        assert!(back.functions.column(c).dot(&w) > 0.0);
    }
}

#[test]
fn truncation_error_equals_discarded_mass() {
    let grid = linspace(-1.0, 1.0, 30);
    let cov = PriorCovSpec::Gauss1.evaluate(&grid).unwrap();
    let w = trapezoid_weights(&grid);
    let sw = w.map(f64::sqrt);
    let scaled = DMatrix::from_fn(30, 30, |i, j| sw[i] * cov[(i, j)] * sw[j]);
    let mut vals: Vec<f64> = SymmetricEigen::new(scaled).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let e = eigen_fpca(&cov, &grid, 3).unwrap();
    let approx = reconstruct_from_eigen(&e);
    // measured in the W^{1/2} · W^{1/2} metric the eigenproblem lives in
    let diff = DMatrix::from_fn(30, 30, |i, j| sw[i] * (cov[(i, j)] - approx[(i, j)]) * sw[j]);
    let tail: f64 = vals.iter().skip(3).map(|v| v * v).sum::<f64>().sqrt();
    assert_relative_eq!(diff.norm(), tail, max_relative = 1e-6);
}

#[test]
fn matern_spectrum_ratios() {
    let grid = linspace(0.0, 1.0, 50);
    let cov = PriorCovSpec::MaternHalf { sigma2: 1.0, rho: 3.0 }.evaluate(&grid).unwrap();
    let e = eigen_fpca(&cov, &grid, 4).unwrap();
    let v = variance_explained(&e.values).unwrap();
    let target = [0.83, 0.08, 0.03, 0.015];
    let t = variance_explained(&DVector::from_row_slice(&target)).unwrap();
    for k in 0..4 {
        assert!((v[k] - t[k]).abs() < 0.05, "{v} vs {t}");
    }
}

#[test]
fn variance_fractions() {
    let v = variance_explained(&DVector::from_row_slice(&[1.0, 0.0, 0.0])).unwrap();
    assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0]);
    let v = variance_explained(&DVector::from_row_slice(&[3.0, 1.0])).unwrap();
    assert_eq!(v.as_slice(), &[0.75, 0.25]);
    let v = variance_explained(&DVector::<f64>::from_row_slice(&[0.83, 0.08, 0.03, 0.015])).unwrap();
    assert!((v[0] - 0.869).abs() < 5e-4);
    assert!(matches!(variance_explained(&DVector::<f64>::zeros(3)), Err(Error::DegenerateSpectrum)));
}

#[test]
fn dense_scores() {
    let grid = linspace(0.0, 2.0, 61);
    let phi = orthonormal_functions(&grid, 3);
    let mut y = DMatrix::zeros(3, 61);
    y.set_row(0, &phi.column(0).transpose());
    y.set_row(1, &(phi.column(0) * 2.0 + phi.column(1) * 3.0).transpose());
    let s = scores_dense(&y, &phi, &grid).unwrap();
    let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
    assert_relative_eq!(s, expect, epsilon = 1e-6);
}

#[test]
fn pace_scalar_and_shrinkage() {
    let grid = [0.0, 1.0];
    let (lambda, phi, sigma2, y) = (2.0, 0.8, 0.5, 1.7);
    let e = Eigen { values: DVector::from_element(1, lambda), functions: DMatrix::from_element(2, 1, phi) };
    let cov = DMatrix::from_element(2, 2, lambda * phi * phi);
    let s = pace_scores(&[0.4], &[y], &DMatrix::from_element(1, 1, sigma2), &cov, &grid, &e).unwrap();
    let oracle = lambda * phi * y / (lambda * phi * phi + sigma2);
    assert!((s[0] - oracle).abs() < 1e-10);
    let s2 = pace_scores(&[0.4], &[y], &DMatrix::from_element(1, 1, 2.0 * sigma2), &cov, &grid, &e).unwrap();
    assert!(s2[0].abs() < s[0].abs());
    let z = pace_scores(&[0.1, 0.6, 0.9], &[0.0; 3], &(DMatrix::identity(3, 3) * 0.1), &cov, &grid, &e).unwrap();
    assert_eq!(z[0], 0.0);
}

#[test]
fn pace_matches_quadrature_on_full_grid() {
    let grid = linspace(0.0, 1.0, 41);
    let phi = orthonormal_functions(&grid, 2);
    let e = Eigen { values: DVector::from_row_slice(&[1.0, 0.4]), functions: phi.clone() };
    let cov = reconstruct_from_eigen(&e);
    let y: Vec<f64> = (0..41).map(|j| 1.2 * phi[(j, 0)] - 0.5 * phi[(j, 1)]).collect();
    let quad = scores_dense(&DMatrix::from_row_slice(1, 41, &y), &phi, &grid).unwrap();
    let noise = DMatrix::zeros(41, 41);
    let pace = scores_sparse(&[(grid.clone(), y)], &[noise], &cov, &grid, &e).unwrap();
    for c in 0..2 {
        assert!((pace[(0, c)] - quad[(0, c)]).abs() < 0.05 * quad[(0, c)].abs(), "{pace} {quad}");
    }
}

#[test]
fn pace_singular_system_is_reported() {
    let grid = [0.0, 1.0];
    let e = Eigen { values: DVector::from_element(1, 1.0), functions: DMatrix::from_element(2, 1, 1.0) };
    let cov = DMatrix::from_element(2, 2, 1.0);
    let curves = vec![(vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 1.0]), (vec![0.2, 0.4, 0.6], vec![1.0, 2.0, 0.0])];
    // an indefinite system cannot be rescued by the ridge
    let noise = vec![DMatrix::identity(3, 3), DMatrix::identity(3, 3) * -2.0];
    assert!(matches!(scores_sparse(&curves, &noise, &cov, &grid, &e), Err(Error::SingularConditioning(1))));
}

fn run_with(omegas: &[f64], weights: &[f64]) -> AsmcRun<ParticleState> {
    let particles = omegas
        .iter()
        .map(|&o| {
            let mut c = fixed_component(ComponentKind::SkewNormal, 1, 3, 2, 0.0, 1.0);
            c.omega_inv = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]) / o;
            ParticleState { components: vec![c], mixture: None }
        })
        .collect();
    AsmcRun {
        particles,
        weights: weights.to_vec(),
        log_likelihoods: vec![0.0; omegas.len()],
        schedule: vec![0.0, 1.0],
        log_evidence: 0.0,
        diagnostics: vec![],
    }
}

fn toy3() -> rbfpca::gibbs::FpcaModel {
    let toy = Toy {
        g: DMatrix::from_row_slice(3, 2, &[0.577, -0.707, 0.577, 0.0, 0.577, 0.707]),
        l_k: DVector::from_element(2, 1.0),
        ..Toy::scalar()
    };
    toy.model(Variant::SN, &[vec![0.0; 3]])
}

#[test]
fn posterior_covariance_cases() {
    let model = toy3();
    let one = run_with(&[1.0], &[1.0]);
    let s = posterior_covariance(&one, &model).unwrap();
    let direct = particle_surfaces(&one, &model).unwrap().remove(0);
    assert_eq!(s.mean, direct);
    assert_eq!(s.lower, direct);
    assert_eq!(s.upper, direct);
    let two = run_with(&[1.0, 3.0], &[0.5, 0.5]);
    let s2 = posterior_covariance(&two, &model).unwrap();
    assert_relative_eq!(s2.mean, direct * 2.0, epsilon = 1e-12);
    let e = SymmetricEigen::new(s2.mean.clone()).eigenvalues;
    assert!(e.iter().all(|&v| v > -1e-8));
}

#[test]
fn fpc_bands_cases() {
    let grid = linspace(0.0, 1.0, 25);
    let phi = orthonormal_functions(&grid, 2);
    let reference = Eigen { values: DVector::from_row_slice(&[1.0, 0.3]), functions: phi.clone() };
    let surface = reconstruct_from_eigen(&reference);
    let b = fpc_credible_bands(std::slice::from_ref(&surface), &[1.0], &grid, &reference, 0.95).unwrap();
    let point = eigen_fpca(&surface, &grid, 2).unwrap();
    assert_relative_eq!(b.lower, point.functions, epsilon = 1e-9);
    assert_relative_eq!(b.upper, point.functions, epsilon = 1e-9);

    // a flipped reference sign flips the bands instead of splitting them
    let mut flipped = reference.clone();
    flipped.functions.column_mut(0).neg_mut();
    let surfaces = vec![surface.clone(), &surface * 1.1, &surface * 0.9];
    let w = [0.3, 0.3, 0.4];
    let a = fpc_credible_bands(&surfaces, &w, &grid, &reference, 0.95).unwrap();
    let f = fpc_credible_bands(&surfaces, &w, &grid, &flipped, 0.95).unwrap();
    assert_relative_eq!(a.lower.column(0).into_owned(), -f.upper.column(0).into_owned(), epsilon = 1e-9);
    assert!((&a.upper - &a.lower).amax() < 1e-8);
}

#[test]
fn weighted_quantiles() {
    let mut p = vec![(3.0, 0.25), (1.0, 0.25), (2.0, 0.5)];
    assert_eq!(weighted_quantile(&mut p, 0.2), 1.0);
    assert_eq!(weighted_quantile(&mut p, 0.5), 2.0);
    assert_eq!(weighted_quantile(&mut p, 0.8), 3.0);
}

#[test]
fn single_precision_eigen() {
    let grid: Vec<f32> = (0..20).map(|j| j as f32 / 19.0).collect();
    let cov = PriorCovSpec::Gauss3.evaluate(&grid).unwrap();
    let e: Eigen32 = eigen_fpca(&cov, &grid, 2).unwrap();
    let g64: Vec<f64> = grid.iter().map(|&v| v as f64).collect();
    let e64 = eigen_fpca(&PriorCovSpec::Gauss3.evaluate(&g64).unwrap(), &g64, 2).unwrap();
    assert!((e.values[0] as f64 - e64.values[0]).abs() < 1e-4);
}

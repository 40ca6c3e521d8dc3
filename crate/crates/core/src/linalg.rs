use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = lit::<T>(0.5);
    (m + m.transpose()) * half
}

/// Symmetric eigendecomposition with eigenvalues sorted in nonincreasing order.
pub fn sym_eigen_desc<T: Real>(m: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn trace<T: Real>(m: &DMatrix<T>) -> T {
    let mut t = T::zero();
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// Cholesky of the symmetrized matrix, escalating diagonal jitter from 1e-12 to
/// 1e-8 of the mean diagonal before giving up.
pub fn cholesky_jitter<T: Real>(m: &DMatrix<T>) -> Result<Cholesky<T, Dyn>> {
    let s = symmetrize(m);
    if let Some(c) = Cholesky::new(s.clone()) {
        return Ok(c);
    }
    let d = s.nrows().max(1);
    let scale = trace(&s) / lit::<T>(d as f64);
    if !(scale > T::zero()) {
        return Err(Error::NonSpdMatrix("nonpositive trace".into()));
    }
    let mut eps = lit::<T>(1e-12);
    while eps <= lit::<T>(1e-8 * 1.0001) {
        let mut j = s.clone();
        for i in 0..d {
            j[(i, i)] += eps * scale;
        }
        if let Some(c) = Cholesky::new(j) {
            return Ok(c);
        }
        eps *= lit::<T>(10.0);
    }
    Err(Error::NonSpdMatrix(format!("cholesky failed for {d}x{d} matrix after jitter")))
}

pub fn spd_inverse<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    Ok(symmetrize(&cholesky_jitter(m)?.inverse()))
}

/// Trapezoid quadrature weights for a sorted grid.
pub fn trapezoid_weights<T: Real>(grid: &[T]) -> DVector<T> {
    let m = grid.len();
    let mut w = DVector::zeros(m);
    if m < 2 {
        if m == 1 {
            w[0] = T::one();
        }
        return w;
    }
    let half = lit::<T>(0.5);
    for j in 0..m - 1 {
        let h = (grid[j + 1] - grid[j]) * half;
        w[j] += h;
        w[j + 1] += h;
    }
    w
}

pub fn log_det_chol(c: &Cholesky<f64, Dyn>) -> f64 {
    let l = c.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

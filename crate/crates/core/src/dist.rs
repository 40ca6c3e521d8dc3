//! Samplers and special functions.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, symmetrize};

pub use statrs::function::gamma::ln_gamma;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail 1 - Φ(x), accurate far into the tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

pub fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn std_normal_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| std_normal(rng))
}

pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
        return Err(Error::DimensionMismatch("mvn mean/cov".into()));
    }
    let chol = cholesky_jitter(cov)?;
    let eps = std_normal_vec(mean.len(), rng);
    Ok(mean + chol.l_dirty().lower_triangle() * eps)
}

/// Draw from N(P⁻¹b, P⁻¹) given the precision P and linear term b.
pub fn sample_mvn_canonical<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    linear: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = cholesky_jitter(precision)?;
    let mut mean = linear.clone();
    chol.solve_mut(&mut mean);
    let eps = std_normal_vec(linear.len(), rng);
    let l = chol.l_dirty().lower_triangle();
    let dev = l
        .tr_solve_lower_triangular(&eps)
        .ok_or_else(|| Error::NonSpdMatrix("singular precision factor".into()))?;
    Ok(mean + dev)
}

/// Exponential-proposal rejection sampler for the standard normal tail x > a, a > 0.
fn std_normal_tail<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let u: f64 = rng.random();
        let z = a - (1.0 - u).ln() / rate;
        let v: f64 = rng.random();
        if v.ln() <= -0.5 * (z - rate) * (z - rate) {
            return z;
        }
    }
}

/// Standard normal restricted to (a, ∞): plain rejection below the crossover
/// point of Robert's sampler, exponential proposals above it.
pub fn sample_std_normal_above<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a < 0.257 {
        loop {
            let x = std_normal(rng);
            if x > a {
                return x;
            }
        }
    }
    std_normal_tail(a, rng)
}

/// N(mean, sd²) restricted to (0, ∞). Never returns a nonpositive value.
pub fn sample_truncated_normal_positive<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    let a = -mean / sd;
    loop {
        let x = mean + sd * sample_std_normal_above(a, rng);
        if x > 0.0 && x.is_finite() {
            return x;
        }
    }
}

/// Coordinate-wise Gibbs sweeps for N(P⁻¹b, P⁻¹) truncated to the positive orthant.
pub fn truncated_mvn_positive_canonical<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    linear: &DVector<f64>,
    x: &mut DVector<f64>,
    sweeps: usize,
    rng: &mut R,
) {
    let d = x.len();
    for _ in 0..sweeps {
        for j in 0..d {
            let pjj = precision[(j, j)];
            let mut s = linear[j];
            for k in 0..d {
                if k != j {
                    s -= precision[(j, k)] * x[k];
                }
            }
            x[j] = sample_truncated_normal_positive(s / pjj, 1.0 / pjj.sqrt(), rng);
        }
    }
}

pub fn sample_truncated_mvn_positive<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    current: &DVector<f64>,
    sweeps: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if current.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("truncated MVN start must be strictly positive".into()));
    }
    if sweeps == 0 {
        return Err(Error::Domain("at least one sweep is required".into()));
    }
    let precision = symmetrize(&cholesky_jitter(cov)?.inverse());
    let linear = &precision * mean;
    let mut x = current.clone();
    truncated_mvn_positive_canonical(&precision, &linear, &mut x, sweeps, rng);
    Ok(x)
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters");
    let x: f64 = g.sample(rng);
    x.max(f64::MIN_POSITIVE)
}

pub fn sample_chi2<R: Rng + ?Sized>(df: f64, rng: &mut R) -> f64 {
    sample_gamma(0.5 * df, 0.5, rng)
}

/// Gamma(shape, rate) conditioned on exceeding `lower`.
pub fn sample_gamma_truncated<R: Rng + ?Sized>(shape: f64, rate: f64, lower: f64, rng: &mut R) -> f64 {
    if lower <= 0.0 {
        return sample_gamma(shape, rate, rng);
    }
    let xl = rate * lower;
    let tail = gamma_ur(shape, xl);
    if tail > 0.05 {
        loop {
            let x = sample_gamma(shape, rate, rng);
            if x > lower {
                return x;
            }
        }
    }
    if tail > 1e-280 {
        // invert the upper regularized incomplete gamma by bisection on [xl, hi]
        let u: f64 = rng.random();
        let target = (1.0 - u) * tail;
        let mut lo = xl;
        let mut hi = xl.max(1.0) * 2.0;
        while gamma_ur(shape, hi) > target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gamma_ur(shape, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        let x = 0.5 * (lo + hi) / rate;
        return if x > lower { x } else { lower * (1.0 + f64::EPSILON) };
    }
    // far tail: the density is close to an exponential with rate b - (a-1)/lower
    let eff = (rate - (shape - 1.0) / lower).max(rate * 1e-3);
    let u: f64 = rng.random();
    lower - (1.0 - u).ln() / eff + f64::MIN_POSITIVE
}

/// Wishart(df, scale) by Bartlett decomposition.
pub fn sample_wishart<R: Rng + ?Sized>(df: f64, scale: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if !(df > d as f64 - 1.0) {
        return Err(Error::InvalidDf { df, dim: d });
    }
    let l = cholesky_jitter(scale)?.l_dirty().lower_triangle();
    let a = bartlett_factor(df, d, rng);
    let la = l * a;
    Ok(numerically_spd(symmetrize(&(&la * la.transpose()))))
}

/// Wishart(df, inv_scale⁻¹) without forming the inverse.
pub fn sample_wishart_inv_scale<R: Rng + ?Sized>(
    df: f64,
    inv_scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = inv_scale.nrows();
    if !(df > d as f64 - 1.0) {
        return Err(Error::InvalidDf { df, dim: d });
    }
    let r = cholesky_jitter(inv_scale)?.l_dirty().lower_triangle();
    let a = bartlett_factor(df, d, rng);
    let x = r
        .tr_solve_lower_triangular(&a)
        .ok_or_else(|| Error::NonSpdMatrix("singular Wishart inverse scale".into()))?;
    Ok(numerically_spd(symmetrize(&(&x * x.transpose()))))
}

/// A Bartlett diagonal near zero (df close to d - 1) yields a draw that is SPD in exact
/// arithmetic but not to working precision; add the smallest relative ridge that restores it.
fn numerically_spd(m: DMatrix<f64>) -> DMatrix<f64> {
    if Cholesky::new(m.clone()).is_some() {
        return m;
    }
    let d = m.nrows();
    let base = m.trace().abs() / d as f64;
    let mut eps = 1e-12;
    loop {
        let mut t = m.clone();
        for i in 0..d {
            t[(i, i)] += eps * base;
        }
        if Cholesky::new(t.clone()).is_some() || eps > 1e-3 {
            log::debug!("Wishart draw ridged by {eps:e} of its mean diagonal");
            return t;
        }
        eps *= 10.0;
    }
}

fn bartlett_factor<R: Rng + ?Sized>(df: f64, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        a[(i, i)] = sample_chi2(df - i as f64, rng).sqrt();
        for j in 0..i {
            a[(i, j)] = std_normal(rng);
        }
    }
    a
}

pub fn chi2_cdf(df: f64, q: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * df, 0.5 * q)
    }
}

/// Quantile of the χ² distribution by bracketed bisection on the regularized
/// incomplete gamma function (upper tail used for p > 1/2).
pub fn chi2_quantile(df: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    if !(df > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom {df} must be positive")));
    }
    let a = 0.5 * df;
    let upper = p > 0.5;
    // g(x) increasing in x, root where g = 0
    let g = |x: f64| {
        if upper {
            (1.0 - p) - gamma_ur(a, x)
        } else {
            gamma_lr(a, x) - p
        }
    };
    let mut lo = 0.0;
    let mut hi = a.max(1.0);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    Ok(lo + hi)
}

/// Matérn covariance with smoothness 1/2 (exponential kernel).
pub fn matern_half_cov(s: f64, t: f64, sigma2: f64, rho: f64) -> f64 {
    sigma2 * (-(s - t).abs() / rho).exp()
}

pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rbfpca::dist::*;
use rbfpca::rng::{site, stream, RngStream};
use rbfpca::sim::sample_skew_normal;
use rbfpca::Error;

const N: usize = 100_000;

fn rng(k: u64) -> rbfpca::rng::StreamRng {
    stream(1000 + k, site::TEST)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a: Vec<u64> = (0..8).map(|_| RngStream::new(7, 3, 2, site::PROPAGATE).rng().random()).collect();
    let mut r1 = RngStream::new(7, 3, 2, site::PROPAGATE).rng();
    let mut r2 = RngStream::new(7, 3, 2, site::PROPAGATE).rng();
    for _ in 0..100 {
        assert_eq!(r1.random::<u64>(), r2.random::<u64>());
    }
    assert!(a.iter().all(|&x| x == a[0]));
    let keys = [(7, 4, 2, site::PROPAGATE), (7, 3, 3, site::PROPAGATE), (7, 3, 2, site::RESAMPLE), (8, 3, 2, site::PROPAGATE)];
    for (s, p, i, st) in keys {
        let x: u64 = RngStream::new(s, p, i, st).rng().random();
        assert_ne!(x, a[0]);
    }
}

#[test]
fn independent_streams_uncorrelated() {
    let mut a = RngStream::new(1, 0, 5, site::PROPAGATE).rng();
    let mut b = RngStream::new(1, 1, 5, site::PROPAGATE).rng();
    let xs: Vec<f64> = (0..N).map(|_| std_normal(&mut a)).collect();
    let ys: Vec<f64> = (0..N).map(|_| std_normal(&mut b)).collect();
    let r = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / N as f64;
    assert!(r.abs() < 0.015, "{r}");
}

#[test]
fn mvn_moments() {
    let mut r = rng(1);
    let mean = DVector::zeros(2);
    let cov = DMatrix::identity(2, 2);
    let draws: Vec<DVector<f64>> = (0..N).map(|_| sample_mvn(&mean, &cov, &mut r).unwrap()).collect();
    for c in 0..2 {
        let m = draws.iter().map(|d| d[c]).sum::<f64>() / N as f64;
        assert!(m.abs() < 0.02);
    }
    let mut r = rng(2);
    let one = DMatrix::from_element(1, 1, 1.0);
    let five = DVector::from_element(1, 5.0);
    let xs: Vec<f64> = (0..N).map(|_| sample_mvn(&five, &one, &mut r).unwrap()[0]).collect();
    let (m, v) = mean_var(&xs);
    assert!((m - 5.0).abs() < 0.02);
    assert!((v - 1.0).abs() < 0.02);
}

#[test]
fn mvn_correlated_covariance() {
    let mut r = rng(3);
    let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let mean = DVector::from_row_slice(&[1.0, -1.0]);
    let mut s = DMatrix::zeros(2, 2);
    for _ in 0..N {
        let x = sample_mvn(&mean, &cov, &mut r).unwrap() - &mean;
        s += &x * x.transpose();
    }
    s /= N as f64;
    assert!((s - cov).norm() < 0.05);
}

#[test]
fn mvn_canonical_matches_moment_form() {
    let p = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]);
    let b = DVector::from_row_slice(&[1.0, 2.0]);
    let cov = p.clone().try_inverse().unwrap();
    let target = &cov * &b;
    let mut r = rng(4);
    let mut m = DVector::zeros(2);
    let mut s = DMatrix::zeros(2, 2);
    for _ in 0..N {
        let x = sample_mvn_canonical(&p, &b, &mut r).unwrap();
        m += &x;
        s += &x * x.transpose();
    }
    m /= N as f64;
    s = s / N as f64 - &m * m.transpose();
    assert!((m - target).norm() < 0.02);
    assert!((s - cov).norm() < 0.03);
}

#[test]
fn mvn_zero_covariance_rejected() {
    let mut r = rng(5);
    let err = sample_mvn(&DVector::zeros(2), &DMatrix::zeros(2, 2), &mut r).unwrap_err();
    assert!(matches!(err, Error::NonSpdMatrix(_)));
}

#[test]
fn half_normal_moment_and_positivity() {
    let mut r = rng(6);
    let one = DMatrix::from_element(1, 1, 1.0);
    let start = DVector::from_element(1, 1.0);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_truncated_mvn_positive(&DVector::zeros(1), &one, &start, 1, &mut r).unwrap()[0])
        .collect();
    assert!(xs.iter().all(|&x| x > 0.0));
    let (m, _) = mean_var(&xs);
    let expect = (2.0 / std::f64::consts::PI).sqrt();
    assert!((m - expect).abs() < 0.02 * expect, "{m}");
}

#[test]
fn truncated_mvn_diagonal_independence() {
    let mut r = rng(7);
    let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 4.0]));
    let mean = DVector::from_row_slice(&[0.5, -1.0]);
    let mut x = DVector::from_element(2, 1.0);
    let mut a = Vec::with_capacity(N);
    let mut b = Vec::with_capacity(N);
    for _ in 0..N {
        x = sample_truncated_mvn_positive(&mean, &cov, &x, 1, &mut r).unwrap();
        assert!(x[0] > 0.0 && x[1] > 0.0);
        a.push(x[0]);
        b.push(x[1]);
    }
    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let c = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / N as f64;
    assert!((c / (va * vb).sqrt()).abs() < 0.02);
}

#[test]
fn truncated_mvn_rejects_bad_start() {
    let mut r = rng(8);
    let one = DMatrix::identity(2, 2);
    let bad = DVector::from_row_slice(&[1.0, 0.0]);
    assert!(sample_truncated_mvn_positive(&DVector::zeros(2), &one, &bad, 1, &mut r).is_err());
    let good = DVector::from_element(2, 1.0);
    assert!(sample_truncated_mvn_positive(&DVector::zeros(2), &one, &good, 0, &mut r).is_err());
}

#[test]
fn truncated_normal_far_tail() {
    let mut r = rng(9);
    for &mean in &[-40.0, -10.0, -3.0, 0.0, 3.0] {
        let mut s = 0.0;
        for _ in 0..20_000 {
            let x = sample_truncated_normal_positive(mean, 1.0, &mut r);
            assert!(x > 0.0 && x.is_finite());
            s += x;
        }
        // E[X | X > 0] = μ + φ(μ)/Φ(μ); for very negative μ use the Mills-ratio limit 1/|μ|
        let expect = if mean < -30.0 {
            1.0 / mean.abs()
        } else {
            let pdf = (-0.5 * mean * mean).exp() / (2.0 * std::f64::consts::PI).sqrt();
            mean + pdf / std_normal_cdf(mean)
        };
        let got = s / 20_000.0;
        assert!((got - expect).abs() < 0.03 * expect.max(0.05), "mean {mean}: {got} vs {expect}");
    }
}

#[test]
fn wishart_mean_and_scalar_case() {
    let mut r = rng(10);
    let mut s = DMatrix::zeros(2, 2);
    for _ in 0..N {
        s += sample_wishart(5.0, &DMatrix::identity(2, 2), &mut r).unwrap();
    }
    s /= N as f64;
    let target = DMatrix::identity(2, 2) * 5.0;
    assert!((&s - &target).norm() / target.norm() < 0.02);

    // d = 1: Wishart(df, σ) = Gamma(df/2, rate 1/(2σ)); compare the empirical CDF
    let sigma = 1.5;
    let df = 3.0;
    let mut xs: Vec<f64> = (0..N)
        .map(|_| sample_wishart(df, &DMatrix::from_element(1, 1, sigma), &mut r).unwrap()[(0, 0)])
        .collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let mut ks: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = chi2_cdf(df, x / sigma);
        ks = ks.max((f - i as f64 / N as f64).abs()).max((f - (i + 1) as f64 / N as f64).abs());
    }
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn wishart_inverse_scale_form() {
    let inv = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let scale = inv.clone().try_inverse().unwrap();
    let mut r = rng(11);
    let mut s = DMatrix::zeros(2, 2);
    for _ in 0..N {
        s += sample_wishart_inv_scale(6.0, &inv, &mut r).unwrap();
    }
    s /= N as f64;
    let target = scale * 6.0;
    assert!((&s - &target).norm() / target.norm() < 0.02);
}

#[test]
fn wishart_df_boundary() {
    let mut r = rng(12);
    let err = sample_wishart(1.0, &DMatrix::identity(2, 2), &mut r).unwrap_err();
    assert!(matches!(err, Error::InvalidDf { .. }));
    assert!(sample_wishart_inv_scale(2.0, &DMatrix::identity(3, 3), &mut r).is_err());
    assert!(sample_wishart(1.0001, &DMatrix::identity(2, 2), &mut r).is_ok());
}

#[test]
fn truncated_gamma() {
    let mut r = rng(13);
    let xs: Vec<f64> = (0..N).map(|_| sample_gamma_truncated(3.0, 2.0, 0.0, &mut r)).collect();
    assert!((mean_var(&xs).0 - 1.5).abs() < 0.02 * 1.5);
    let xs: Vec<f64> = (0..N).map(|_| sample_gamma_truncated(1.0, 0.1, 2.0, &mut r)).collect();
    assert!(xs.iter().all(|&x| x > 2.0));
    assert!((mean_var(&xs).0 - 12.0).abs() < 0.02 * 12.0);
    // deep tail goes through the inverse-CDF branch: Exp(1) above 30 has mean 31
    let xs: Vec<f64> = (0..20_000).map(|_| sample_gamma_truncated(1.0, 1.0, 30.0, &mut r)).collect();
    assert!(xs.iter().all(|&x| x > 30.0));
    assert!((mean_var(&xs).0 - 31.0).abs() < 0.05);
}

#[test]
fn chi2_quantiles() {
    assert_abs_diff_eq!(chi2_quantile(2.0, 0.99).unwrap(), 9.21034, epsilon = 1e-4);
    assert_abs_diff_eq!(chi2_quantile(2.0, 0.5).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-10);
    // χ²₂ is Exp(1/2): q = -2 ln(1 - p)
    for &p in &[0.01, 0.2, 0.7, 0.975, 0.999] {
        assert_abs_diff_eq!(chi2_quantile(2.0, p).unwrap(), -2.0 * (1.0 - p).ln(), epsilon = 1e-9);
    }
    // χ²₁ quantile is the squared normal quantile
    assert_abs_diff_eq!(chi2_quantile(1.0, 0.95).unwrap(), 1.959963984540054f64.powi(2), epsilon = 1e-9);
    assert!(matches!(chi2_quantile(3.0, 1.0), Err(Error::Domain(_))));
    assert!(chi2_quantile(3.0, 0.0).is_err());
    for df in [1.0, 2.0, 4.0, 5.0, 10.0, 50.0] {
        for p in [0.001, 0.1, 0.5, 0.9, 0.99] {
            let q = chi2_quantile(df, p).unwrap();
            assert_abs_diff_eq!(chi2_cdf(df, q), p, epsilon = 1e-8);
        }
    }
}

#[test]
fn matern_half_values() {
    assert_eq!(matern_half_cov(0.4, 0.4, 2.5, 3.0), 2.5);
    assert_abs_diff_eq!(matern_half_cov(0.0, 3.0, 1.0, 3.0), (-1f64).exp(), epsilon = 1e-15);
    // Bessel form: for ν = 1/2, σ² 2^{1/2}/Γ(1/2) x^{1/2} K_{1/2}(x) with K_{1/2}(x) = √(π/(2x)) e^{-x}
    let x: f64 = 0.7 / 3.0;
    let bessel = (2f64).sqrt() / std::f64::consts::PI.sqrt() * x.sqrt() * (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
    assert_abs_diff_eq!(matern_half_cov(0.1, 0.8, 1.0, 3.0), bessel, epsilon = 1e-14);
    let mut r = rng(14);
    for _ in 0..100 {
        let (s, t): (f64, f64) = (r.random(), r.random());
        assert_eq!(matern_half_cov(s, t, 1.3, 0.4), matern_half_cov(t, s, 1.3, 0.4));
    }
}

#[test]
fn skew_normal_mean() {
    let mut r = rng(15);
    let xs: Vec<f64> = (0..N).map(|_| sample_skew_normal(0.0, 1.0, 5.0, &mut r)).collect();
    let delta = 5.0 / 26f64.sqrt();
    let expect = delta * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mean_var(&xs).0 - expect).abs() < 0.02 * expect);
}

#[test]
fn normal_helpers() {
    assert_abs_diff_eq!(std_normal_cdf(0.0), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(std_normal_quantile(0.975), 1.959963984540054, epsilon = 1e-12);
    assert_abs_diff_eq!(std_normal_sf(1.0) + std_normal_cdf(1.0), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(normal_ln_pdf(1.0, 0.0, 1.0), -0.5 - 0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-14);
}

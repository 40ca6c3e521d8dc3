use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rbfpca::dist::std_normal;
use rbfpca::outlier::{
    classical_location_scatter, detect, flag_outliers, mahalanobis_distances, robust_location_scatter, top_k,
};
use rbfpca::rng::{site, stream};
use rbfpca::{Robust, Robust32};

fn normal_scores(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut r = stream(seed, site::TEST);
    DMatrix::from_fn(n, k, |_, _| std_normal(&mut r))
}

#[test]
fn clean_data_consistency() {
    let x = normal_scores(1000, 2, 1);
    let est: Robust = robust_location_scatter(&x).unwrap();
    assert!(est.location.amax() < 0.1, "{}", est.location);
    let rel = (&est.scatter - DMatrix::identity(2, 2)).norm() / 2f64.sqrt();
    assert!(rel < 0.15, "{}", est.scatter);
    assert!(!est.ridged);
}

#[test]
fn breakdown_resistance() {
    let mut x = normal_scores(1000, 2, 2);
    for i in 0..100 {
        x[(i, 0)] = 100.0;
        x[(i, 1)] = 100.0;
    }
    let est = robust_location_scatter(&x).unwrap();
    assert!(est.location.amax() < 0.2, "{}", est.location);
    let (classical, _) = classical_location_scatter(&x);
    assert!((classical[0] - 10.0).abs() < 0.5);

    let clean = robust_location_scatter(&normal_scores(500, 2, 3)).unwrap().location.norm();
    let mut y = normal_scores(500, 2, 3);
    for i in 0..100 {
        y[(i, 0)] = 1e6;
        y[(i, 1)] = -1e6;
    }
    let est = robust_location_scatter(&y).unwrap();
    assert!(est.location.norm() <= 10.0 * clean.max(0.01), "{}", est.location);
}

#[test]
fn identical_rows_take_the_ridge_path() {
    let x = DMatrix::from_fn(20, 2, |_, j| j as f64 + 1.0);
    let est = robust_location_scatter(&x).unwrap();
    assert!(est.ridged);
    assert_relative_eq!(est.location, DVector::from_row_slice(&[1.0, 2.0]), epsilon = 1e-12);
}

#[test]
fn distance_examples() {
    let x = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
    let d = mahalanobis_distances(&x, &DVector::zeros(2), &DMatrix::identity(2, 2)).unwrap();
    assert_relative_eq!(d[0], 5.0, epsilon = 1e-12);
    assert_eq!(d[1], 0.0);
    let d = mahalanobis_distances(&DMatrix::from_row_slice(1, 2, &[2.0, 0.0]), &DVector::zeros(2), &(DMatrix::identity(2, 2) * 4.0))
        .unwrap();
    assert_relative_eq!(d[0], 1.0, epsilon = 1e-12);
    assert!(mahalanobis_distances(&x, &DVector::zeros(2), &DMatrix::zeros(2, 2)).is_err());
}

#[test]
fn flag_threshold_and_calibration() {
    let (flags, thr) = flag_outliers(&DVector::<f64>::zeros(5), 2, 0.99).unwrap();
    assert!((thr - 9.21034).abs() < 1e-4);
    assert!(flags.iter().all(|f| !f));
    assert!(flag_outliers(&DVector::<f64>::zeros(1), 2, 1.0).is_err());

    let x = normal_scores(10_000, 2, 4);
    let (loc, scatter) = classical_location_scatter(&x);
    let d = mahalanobis_distances(&x, &loc, &scatter).unwrap();
    let (flags, _) = flag_outliers(&d, 2, 0.99).unwrap();
    let rate = flags.iter().filter(|&&f| f).count() as f64 / 1e4;
    assert!(rate > 0.005 && rate < 0.02, "{rate}");
}

#[test]
fn ranking_and_report() {
    let d = DVector::from_row_slice(&[0.5, 3.0, 1.0, 3.0, 0.1]);
    assert_eq!(top_k(&d, 3), vec![1, 3, 2]);
    assert_eq!(top_k(&d, 10).len(), 5);

    let mut x = normal_scores(200, 2, 5);
    x[(7, 0)] = 15.0;
    let ids: Vec<String> = (0..200).map(|i| format!("c{i}")).collect();
    let rep = detect(&ids, &x, 0.995).unwrap();
    assert!(rep.flags[7]);
    assert!((rep.threshold.unwrap() - 10.5966).abs() < 1e-3);
    for (d, f) in rep.distances.iter().zip(&rep.flags) {
        assert_eq!(*f, d * d > rep.threshold.unwrap());
    }
}

#[test]
fn affine_equivariance_of_flags() {
    let mut x = normal_scores(300, 2, 6);
    for i in 0..15 {
        x[(i, 0)] += 8.0;
    }
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -1.0, 3.0]);
    let b = DVector::from_row_slice(&[4.0, -7.0]);
    let y = DMatrix::from_fn(300, 2, |i, j| (a.row(j) * x.row(i).transpose())[0] + b[j]);
    let ids: Vec<String> = (0..300).map(|i| i.to_string()).collect();
    let f1 = detect(&ids, &x, 0.99).unwrap();
    let f2 = detect(&ids, &y, 0.99).unwrap();
    for (d1, d2) in f1.distances.iter().zip(&f2.distances) {
        assert!((d1 - d2).abs() < 1e-5 * d1.max(1.0));
    }
    assert_eq!(f1.flags, f2.flags);
}

#[test]
fn monotone_in_level_and_row_order() {
    let mut x = normal_scores(400, 3, 7);
    for i in 0..20 {
        x[(i, 1)] -= 6.0;
    }
    let ids: Vec<String> = (0..400).map(|i| i.to_string()).collect();
    let mut last = usize::MAX;
    for level in [0.9, 0.95, 0.99, 0.999] {
        let n = detect(&ids, &x, level).unwrap().flags.iter().filter(|&&f| f).count();
        assert!(n <= last);
        last = n;
    }
    let rev = x.select_rows((0..400).rev().collect::<Vec<_>>().iter());
    let a = robust_location_scatter(&x).unwrap();
    let b = robust_location_scatter(&rev).unwrap();
    assert_relative_eq!(a.location, b.location, epsilon = 1e-10);
    assert_relative_eq!(a.scatter, b.scatter, epsilon = 1e-10);
}

#[test]
fn single_precision_estimator() {
    let x = normal_scores(500, 2, 8);
    let x32 = x.map(|v| v as f32);
    let e32: Robust32 = robust_location_scatter(&x32).unwrap();
    let e64 = robust_location_scatter(&x).unwrap();
    assert!((e32.location[0] as f64 - e64.location[0]).abs() < 1e-3);
}

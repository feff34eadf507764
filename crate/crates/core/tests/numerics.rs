mod common;

use common::*;
use ilc_core::numerics::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn quadratic_examples() {
    let x = DVector::from_vec(vec![1.0, 2.0]);
    assert_eq!(weighted_quadratic(&x, &Weight::Full(DMatrix::identity(2, 2))).unwrap(), 5.0);
    assert_eq!(weighted_quadratic(&x, &Weight::Scalar(0.0)).unwrap(), 0.0);
    assert_eq!(weighted_quadratic(&DVector::zeros(2), &Weight::Scalar(1e6)).unwrap(), 0.0);
    assert_eq!(weighted_quadratic(&x, &Weight::Scalar(3.0)).unwrap(), 15.0);
    let w = Weight::Full(DMatrix::identity(3, 3));
    assert!(matches!(weighted_quadratic(&x, &w), Err(NumericsError::Dimension { expected: 3, got: 2 })));
}

#[test]
fn trial_cost_example() {
    let w = Weighting::standard();
    let mut e = DVector::zeros(4);
    e[0] = 1.0;
    let u = DVector::zeros(2);
    let un = DVector::from_vec(vec![1e-3, 0.0]);
    let c = trial_cost(&e, &u, &un, &w).unwrap();
    assert!((c - (1e6 + 1e-12)).abs() < 1e-9);
    assert_eq!(trial_cost(&DVector::zeros(4), &u, &u, &w).unwrap(), 0.0);
}

#[test]
fn weighting_requires_positive_error_weight() {
    let err = Weighting::new(Weight::Scalar(0.0), Weight::Scalar(1.0), Weight::Scalar(0.0)).unwrap_err();
    assert!(err.to_string().contains("W_e"), "{err}");
    assert!(Weighting::new(Weight::Scalar(1.0), Weight::Scalar(-1.0), Weight::Scalar(0.0)).is_err());
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert!(Weighting::new(Weight::Full(asym), Weight::Scalar(0.0), Weight::Scalar(0.0)).is_err());
}

#[test]
fn spectral_norm_examples() {
    assert_eq!(spectral_norm(&DMatrix::identity(5, 5)).unwrap(), 1.0);
    assert_eq!(spectral_norm(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -4.0]));
    assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-14);
    let mut bad = DMatrix::identity(2, 2);
    bad[(0, 1)] = f64::NAN;
    assert!(matches!(spectral_norm(&bad), Err(NumericsError::NonFinite)));
}

#[test]
fn spectral_norm_matches_power_iteration() {
    let mut g = rng(7);
    for _ in 0..20 {
        let m = random_matrix(&mut g, 5, 5);
        let a = spectral_norm(&m).unwrap();
        let b = power_iteration_norm(&m, 2000);
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }
}

#[test]
fn sampler_is_deterministic_per_seed() {
    let mean = DVector::zeros(8);
    let a = gaussian_vector(&mut SeededSampler::new(42), &mean, 1.0).unwrap();
    let b = gaussian_vector(&mut SeededSampler::new(42), &mean, 1.0).unwrap();
    let c = gaussian_vector(&mut SeededSampler::new(43), &mean, 1.0).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(SeededSampler::new(1).algorithm_id(), SAMPLER_ALGORITHM);
}

#[test]
fn zero_variance_returns_mean() {
    let mean = DVector::from_vec(vec![1.5, -2.0]);
    let mut s = SeededSampler::new(0);
    assert_eq!(gaussian_vector(&mut s, &mean, 0.0).unwrap(), mean);
    // no randomness consumed
    let next = s.standard_normal();
    assert_eq!(next, SeededSampler::new(0).standard_normal());
    assert!(matches!(gaussian_vector(&mut s, &mean, -1.0), Err(NumericsError::NegativeVariance(_))));
}

#[test]
fn gaussian_moments() {
    let mut s = SeededSampler::new(11);
    let mean = DVector::from_vec(vec![0.0]);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| gaussian_vector(&mut s, &mean, 1.0).unwrap()[0]).collect();
    let m = draws.iter().sum::<f64>() / n as f64;
    let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    assert!(m.abs() < 0.01, "{m}");
    assert!((v - 1.0).abs() < 0.02, "{v}");
}

proptest! {
    #[test]
    fn quadratic_nonnegative_for_psd(seed in any::<u64>(), n in 1usize..8) {
        let mut g = rng(seed);
        let a = random_matrix(&mut g, n, n);
        let w = Weight::Full(&a * a.transpose());
        let x = random_vector(&mut g, n);
        prop_assert!(weighted_quadratic(&x, &w).unwrap() >= -1e-12);
    }

    #[test]
    fn spectral_norm_is_homogeneous(seed in any::<u64>(), c in -10.0f64..10.0) {
        let mut g = rng(seed);
        let m = random_matrix(&mut g, 4, 3);
        let lhs = spectral_norm(&(&m * c)).unwrap();
        let rhs = c.abs() * spectral_norm(&m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn trial_cost_nonnegative(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (e, u, un) = (random_vector(&mut g, 6), random_vector(&mut g, 2), random_vector(&mut g, 2));
        let w = Weighting::new(Weight::Scalar(2.0), Weight::Scalar(0.5), Weight::Scalar(0.1)).unwrap();
        prop_assert!(trial_cost(&e, &u, &un, &w).unwrap() >= 0.0);
    }
}

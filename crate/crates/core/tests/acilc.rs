mod common;

use common::*;
use ilc_core::acilc::*;
use ilc_core::numerics::{trial_cost, SeededSampler, Weight, Weighting};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// `N = m = 1`, `S r = 1`, `J Psi = 2`, `Psi = 1`.
fn scalar_toy() -> TrialModel {
    TrialModel { sr: DVector::from_element(1, 1.0), jpsi: DMatrix::from_element(1, 1, 2.0), psi: DMatrix::identity(1, 1) }
}

fn toy_mdp(gamma: f64, wu: f64) -> MdpConfig {
    let w = Weighting::new(Weight::Scalar(1.0), Weight::Scalar(wu), Weight::Scalar(0.0)).unwrap();
    MdpConfig::new(gamma, w, 1, 1).unwrap()
}

fn frozen(alpha_w: f64) -> LearnerConfig {
    LearnerConfig {
        alpha_w: DecaySchedule::constant(alpha_w),
        alpha_theta: DecaySchedule::constant(0.0),
        sigma: DecaySchedule::constant(0.0),
        ..LearnerConfig::plain(1)
    }
}

#[test]
fn projection_examples() {
    let e = DVector::from_vec(vec![1.0, -2.0, 3.0]);
    assert_eq!(project_error(&DMatrix::identity(3, 3), &e), e);
    let psi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    assert_eq!(project_error(&psi, &e), DVector::from_vec(vec![2.0, 0.0]));
}

#[test]
fn critic_examples() {
    let c = CriticState { w: DVector::zeros(2), alpha_w: 0.1 };
    let phi = DVector::from_vec(vec![1.0, 2.0]);
    assert_eq!(critic_value(&c, &phi), 0.0);
    assert_eq!(td_error(1.0, 0.0, 0.0, 0.9), 1.0);
    assert_eq!(td_error(1.0, 5.0, 2.0, 0.0), -1.0);
    assert_eq!(critic_update(&c, 0.0, &phi), c);
    assert_eq!(critic_update(&c, 3.0, &DVector::zeros(2)), c);
    assert_eq!(critic_update(&c, 1.0, &phi).w, DVector::from_vec(vec![0.1, 0.2]));
    let n = critic_update_normalized(&c, 1.0, &phi);
    assert!((n.w[1] - 0.2 / 6.0).abs() < 1e-15);
}

#[test]
fn actor_examples() {
    let a = ActorState { theta: DMatrix::zeros(2, 2), alpha_theta: 0.5, sigma2: 0.0 };
    let phi = DVector::from_vec(vec![1.0, -1.0]);
    assert_eq!(policy_mean(&a, &phi), DVector::zeros(2));
    let mut s = SeededSampler::new(0);
    assert_eq!(draw_action(&a, &phi, &mut s).unwrap(), DVector::zeros(2));

    let mu = DVector::from_vec(vec![0.3, 0.1]);
    assert_eq!(log_policy_gradient(&mu, &mu, 0.5, &phi).unwrap(), DMatrix::zeros(2, 2));
    assert!(matches!(log_policy_gradient(&mu, &mu, 0.0, &phi), Err(AcilcError::ZeroVariance(_))));

    let g = DMatrix::from_element(2, 2, 1.0);
    assert_eq!(actor_update(&a, 0.0, &g), a);
    assert_eq!(actor_update(&a, 1.0, &DMatrix::zeros(2, 2)), a);
    assert_eq!(actor_update(&a, 1.0, &g).theta, DMatrix::from_element(2, 2, -0.5));
    let clipped = actor_update_clipped(&a, 1.0, &g, Some(0.1));
    assert!((clipped.theta.norm() - 0.1).abs() < 1e-15);
}

#[test]
fn feature_maps() {
    let x = DVector::from_vec(vec![2.0, -1.0]);
    let fm = |critic, actor| FeatureMap { critic, actor, scale: DVector::from_vec(vec![10.0, 1.0]) };
    assert_eq!(fm(CriticFeatures::Linear, ActorFeatures::State).critic_features(&x).as_slice(), &[20.0, -1.0]);
    assert_eq!(fm(CriticFeatures::Affine, ActorFeatures::Bias).critic_features(&x).as_slice(), &[1.0, 20.0, -1.0]);
    assert_eq!(
        fm(CriticFeatures::Quadratic, ActorFeatures::Bias).critic_features(&x).as_slice(),
        &[1.0, 20.0, -1.0, 400.0, -20.0, 1.0]
    );
    assert_eq!(fm(CriticFeatures::Linear, ActorFeatures::Bias).actor_features(&x).as_slice(), &[1.0]);
    assert_eq!(fm(CriticFeatures::Linear, ActorFeatures::Affine).actor_features(&x).as_slice(), &[1.0, 20.0, -1.0]);
    let f = fm(CriticFeatures::Linear, ActorFeatures::Affine);
    let u = DVector::from_vec(vec![0.4, -0.7]);
    let theta = f.theta_for_action(&x, &u);
    let mean = policy_mean(&ActorState { theta, alpha_theta: 0.0, sigma2: 0.0 }, &f.actor_features(&x));
    assert!((mean - u).amax() < 1e-12);
}

#[test]
fn gaussian_draws_have_policy_moments() {
    let a = ActorState { theta: DMatrix::from_element(1, 1, 2.0), alpha_theta: 0.0, sigma2: 0.25 };
    let phi = DVector::from_element(1, 0.5);
    let mut s = SeededSampler::new(4);
    let n = 100_000;
    let d: Vec<f64> = (0..n).map(|_| draw_action(&a, &phi, &mut s).unwrap()[0]).collect();
    let m = d.iter().sum::<f64>() / n as f64;
    let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    assert!((m - 1.0).abs() < 0.01);
    assert!((v - 0.25).abs() < 0.01);
}

#[test]
fn zero_trials_gives_empty_run() {
    let run = run_acilc(&scalar_toy(), &toy_mdp(0.9, 0.0), &LearnerConfig::plain(1), &Initialization::default(), &mut SeededSampler::new(0), 0).unwrap();
    assert!(run.records.is_empty());
    let one = run_acilc(&scalar_toy(), &toy_mdp(0.9, 0.0), &LearnerConfig::plain(1), &Initialization::default(), &mut SeededSampler::new(0), 1).unwrap();
    assert_eq!(one.records.len(), 1);
    assert_eq!(one.records[0].j, 0);
    assert_eq!(one.records[0].delta, 0.0);
}

#[test]
fn frozen_policy_keeps_cost() {
    let run = run_acilc(&scalar_toy(), &toy_mdp(0.9, 0.0), &frozen(0.0), &Initialization::default(), &mut SeededSampler::new(0), 20).unwrap();
    assert!(run.records.iter().all(|r| r.cost == 1.0 && r.upsilon[0] == 0.0));
}

#[test]
fn critic_converges_under_frozen_policy() {
    let gamma = 0.9;
    let run = run_acilc(&scalar_toy(), &toy_mdp(gamma, 0.0), &frozen(0.5), &Initialization::default(), &mut SeededSampler::new(0), 501).unwrap();
    let td: Vec<f64> = run.records[1..].iter().map(|r| r.delta.abs()).collect();
    assert!(slope(&td) < 0.0);
    assert!(td[td.len() - 1] < 1e-6 * td[0]);

    // discounted cost-to-go by rollout of the same frozen policy
    let c = 1.0;
    let rollout: f64 = (0..2000).map(|k| gamma.powi(k) * c).sum();
    let v = critic_value(&run.critic, &DVector::from_element(1, 1.0));
    assert!((v - rollout).abs() <= 0.05 * rollout, "{v} vs {rollout}");
}

#[test]
fn learning_lowers_cost_on_scalar_toy() {
    let learner = LearnerConfig {
        alpha_w: DecaySchedule::constant(0.2),
        alpha_theta: DecaySchedule::constant(0.002),
        sigma: DecaySchedule::constant(0.05),
        ..LearnerConfig::plain(1)
    };
    let init = Initialization { upsilon0: None, w0: None, theta0: Some(DMatrix::from_element(1, 1, 0.1)) };
    let mut slopes = Vec::new();
    for seed in 0..5 {
        let run = run_acilc(&scalar_toy(), &toy_mdp(0.5, 0.0), &learner, &init, &mut SeededSampler::new(seed), 200).unwrap();
        let costs: Vec<f64> = run.records.iter().map(|r| r.cost).collect();
        slopes.push(slope(&costs));
    }
    assert!(median(slopes.clone()) < 0.0, "{slopes:?}");
}

#[test]
fn runs_are_deterministic_per_seed() {
    let learner = LearnerConfig { sigma: DecaySchedule::constant(0.1), ..LearnerConfig::plain(1) };
    let go = |seed| run_acilc(&scalar_toy(), &toy_mdp(0.9, 0.0), &learner, &Initialization::default(), &mut SeededSampler::new(seed), 30).unwrap().records;
    assert_eq!(go(1), go(1));
    assert_ne!(go(1), go(2));
}

#[test]
fn records_are_consistent_with_trial_map() {
    let mut g = rng(2);
    let n = 12;
    let model = TrialModel { sr: random_vector(&mut g, n), jpsi: random_matrix(&mut g, n, 2), psi: random_matrix(&mut g, n, 2) };
    let w = Weighting::new(Weight::Scalar(1.0), Weight::Scalar(0.1), Weight::Scalar(0.05)).unwrap();
    let mdp = MdpConfig::new(0.9, w.clone(), n, 2).unwrap();
    let learner = LearnerConfig {
        alpha_theta: DecaySchedule::constant(1e-4),
        sigma: DecaySchedule::constant(0.1),
        ..LearnerConfig::plain(2)
    };
    let run = run_acilc(&model, &mdp, &learner, &Initialization::default(), &mut SeededSampler::new(3), 25).unwrap();
    for (k, r) in run.records.iter().enumerate() {
        assert_eq!(r.j, k);
        let e = &model.sr - &model.jpsi * &r.upsilon;
        assert!((project_error(&model.psi, &e) - &r.x).amax() < 1e-12);
        assert!((e.norm() - r.e_norm2).abs() < 1e-12);
        let prev = if k == 0 { &r.upsilon } else { &run.records[k - 1].upsilon };
        assert!((trial_cost(&e, prev, &r.upsilon, &w).unwrap() - r.cost).abs() < 1e-12);
        if k > 0 {
            assert!((r.sigma2 - 0.01).abs() < 1e-15);
        }
    }
    assert!((&run.final_error - (&model.sr - &model.jpsi * &run.records[24].upsilon)).amax() < 1e-12);
}

#[test]
fn divergence_reports_trial() {
    let learner = LearnerConfig {
        alpha_w: DecaySchedule::constant(1e6),
        alpha_theta: DecaySchedule::constant(1e6),
        sigma: DecaySchedule::constant(1.0),
        ..LearnerConfig::plain(1)
    };
    match run_acilc(&scalar_toy(), &toy_mdp(0.9, 0.0), &learner, &Initialization::default(), &mut SeededSampler::new(0), 500) {
        Err(AcilcError::Diverged { trial }) => assert!(trial >= 1 && trial < 500),
        other => panic!("expected divergence, got {:?}", other.map(|r| r.records.len())),
    }
}

#[test]
fn mismatched_dimensions_rejected() {
    let learner = LearnerConfig::plain(2);
    assert!(matches!(
        run_acilc(&scalar_toy(), &toy_mdp(0.9, 0.0), &learner, &Initialization::default(), &mut SeededSampler::new(0), 5),
        Err(AcilcError::Config(_))
    ));
    let w = Weighting::standard();
    assert!(MdpConfig::new(0.0, w.clone(), 1, 1).is_err());
    assert!(MdpConfig::new(1.5, w, 1, 1).is_err());
}

#[test]
fn gradient_matches_finite_differences() {
    let mut g = rng(17);
    for _ in 0..10 {
        let (p, m) = (3, 2);
        let theta = random_matrix(&mut g, p, m);
        let phi = random_vector(&mut g, p);
        let u = random_vector(&mut g, m);
        let sigma2 = 0.3;
        let mu = theta.tr_mul(&phi);
        let grad = log_policy_gradient(&u, &mu, sigma2, &phi).unwrap();
        let h = 1e-6;
        for a in 0..p {
            for b in 0..m {
                let (mut tp, mut tm) = (theta.clone(), theta.clone());
                tp[(a, b)] += h;
                tm[(a, b)] -= h;
                let fd = (log_density(&u, &tp.tr_mul(&phi), sigma2) - log_density(&u, &tm.tr_mul(&phi), sigma2)) / (2.0 * h);
                assert!((fd - grad[(a, b)]).abs() <= 1e-6 * grad.amax().max(1.0));
            }
        }
    }
}

proptest! {
    #[test]
    fn schedules_are_nonincreasing(initial in 0.0f64..10.0, rate in 0.01f64..1.0, floor in 0.0f64..1.0, j in 0usize..10_000) {
        let s = DecaySchedule::new(initial, rate, floor);
        prop_assert!(s.value(j + 1) <= s.value(j));
        prop_assert!(s.value(j) >= floor);
        prop_assert_eq!(s.value(0), initial.max(floor));
    }
}

//! Model-free actor-critic ILC on the trial-level MDP.
//!
//! State `x_j = Psi^T e_j`, action `u_{j+1} ~ N(theta^T phi_a(x_j), sigma^2 I)`,
//! critic `V(x) = w^T phi_c(x)`, TD error `delta_j = c_j + gamma V(x_{j+1}) - V(x_j)`,
//! critic step `w += alpha_w delta phi_c(x_j)` and actor step
//! `theta -= alpha_theta delta grad_theta log pi`.
//!
//! With `CriticFeatures::Linear`, `ActorFeatures::State`, unit feature scale,
//! plain critic steps, no clipping and no cost normalization this is exactly the
//! plain linear form (`phi_c(x) = phi_a(x) = x`). The other options exist for
//! tuning and are all off by default.

use crate::numerics::{gaussian_vector, trial_cost, NumericsError, SeededSampler, Weighting};
use crate::trajectory::BasisMatrix;
use crate::lti_core::LiftedSystem;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcilcError {
    #[error("learner diverged at trial {trial}: non-finite state")]
    Diverged { trial: usize },
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("policy gradient undefined for sigma^2 = {0}")]
    ZeroVariance(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `value(j) = max(floor, initial * rate^j)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySchedule {
    pub initial: f64,
    pub rate: f64,
    pub floor: f64,
}

impl DecaySchedule {
    pub const fn new(initial: f64, rate: f64, floor: f64) -> Self {
        Self { initial, rate, floor }
    }

    pub const fn constant(v: f64) -> Self {
        Self { initial: v, rate: 1.0, floor: v }
    }

    pub fn value(&self, j: usize) -> f64 {
        let v = self.initial * self.rate.powi(j.min(i32::MAX as usize) as i32);
        v.max(self.floor)
    }

    pub fn validate(&self, name: &str) -> Result<(), String> {
        if !(self.initial.is_finite() && self.initial >= 0.0) {
            return Err(format!("{name}.initial must be finite and >= 0"));
        }
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(format!("{name}.rate must lie in (0, 1]"));
        }
        if !(self.floor.is_finite() && self.floor >= 0.0) {
            return Err(format!("{name}.floor must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticFeatures {
    /// `phi_c(x) = D x`
    Linear,
    /// `phi_c(x) = [1, D x]`
    Affine,
    /// `phi_c(x) = [1, z, z_i z_k (i <= k)]` with `z = D x`
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorFeatures {
    /// `phi_a(x) = D x`
    State,
    /// `phi_a(x) = [1]`: the policy mean is a learned constant.
    Bias,
    /// `phi_a(x) = [1, D x]`
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticStep {
    /// `w += alpha_w delta phi`
    Plain,
    /// `w += alpha_w delta phi / (1 + |phi|^2)`
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostNormalization {
    None,
    /// Divide the learner's cost signal by the trial-0 cost.
    InitialCost,
}

/// Feature maps for critic and actor, with a fixed diagonal state scaling `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub critic: CriticFeatures,
    pub actor: ActorFeatures,
    pub scale: DVector<f64>,
}

impl FeatureMap {
    pub fn plain(m: usize) -> Self {
        Self { critic: CriticFeatures::Linear, actor: ActorFeatures::State, scale: DVector::from_element(m, 1.0) }
    }

    pub fn m(&self) -> usize {
        self.scale.len()
    }

    pub fn critic_dim(&self) -> usize {
        match self.critic {
            CriticFeatures::Linear => self.m(),
            CriticFeatures::Affine => self.m() + 1,
            CriticFeatures::Quadratic => 1 + self.m() + self.m() * (self.m() + 1) / 2,
        }
    }

    pub fn actor_dim(&self) -> usize {
        match self.actor {
            ActorFeatures::State => self.m(),
            ActorFeatures::Bias => 1,
            ActorFeatures::Affine => self.m() + 1,
        }
    }

    fn scaled(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.scale)
    }

    fn with_bias(v: DVector<f64>) -> DVector<f64> {
        v.insert_row(0, 1.0)
    }

    pub fn critic_features(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.critic {
            CriticFeatures::Linear => self.scaled(x),
            CriticFeatures::Affine => Self::with_bias(self.scaled(x)),
            CriticFeatures::Quadratic => {
                let z = self.scaled(x);
                let m = z.len();
                let mut phi = Vec::with_capacity(self.critic_dim());
                phi.push(1.0);
                phi.extend(z.iter());
                for i in 0..m {
                    for k in i..m {
                        phi.push(z[i] * z[k]);
                    }
                }
                DVector::from_vec(phi)
            }
        }
    }

    pub fn actor_features(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.actor {
            ActorFeatures::State => self.scaled(x),
            ActorFeatures::Bias => DVector::from_element(1, 1.0),
            ActorFeatures::Affine => Self::with_bias(self.scaled(x)),
        }
    }

    /// Smallest-norm `theta` whose mean at state `x` is `u`.
    pub fn theta_for_action(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let phi = self.actor_features(x);
        let n2 = phi.norm_squared();
        if n2 == 0.0 {
            return DMatrix::zeros(phi.len(), u.len());
        }
        &phi * u.transpose() / n2
    }
}

/// Discount factor, cost weights and problem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpConfig {
    pub gamma: f64,
    pub weights: Weighting,
    pub horizon: usize,
    pub m: usize,
}

impl MdpConfig {
    pub fn new(gamma: f64, weights: Weighting, horizon: usize, m: usize) -> Result<Self, AcilcError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(AcilcError::Config(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        Ok(Self { gamma, weights, horizon, m })
    }
}

/// Step sizes, exploration and learner options.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub alpha_w: DecaySchedule,
    pub alpha_theta: DecaySchedule,
    /// Exploration standard deviation; the variance is its square.
    pub sigma: DecaySchedule,
    pub features: FeatureMap,
    pub critic_step: CriticStep,
    /// Cap on the Frobenius norm of one actor step, in units of the current sigma.
    pub actor_step_clip: Option<f64>,
    pub cost_normalization: CostNormalization,
}

impl LearnerConfig {
    /// Plain linear learner with the default exponential schedules.
    pub fn plain(m: usize) -> Self {
        Self {
            alpha_w: DecaySchedule::new(0.05, 0.95, 1e-4),
            alpha_theta: DecaySchedule::new(0.01, 0.95, 1e-5),
            sigma: DecaySchedule::new(0.01, 0.9, 1e-4),
            features: FeatureMap::plain(m),
            critic_step: CriticStep::Plain,
            actor_step_clip: None,
            cost_normalization: CostNormalization::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticState {
    pub w: DVector<f64>,
    pub alpha_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorState {
    pub theta: DMatrix<f64>,
    pub alpha_theta: f64,
    pub sigma2: f64,
}

/// One executed trial.
///
/// Record `j` holds the parameters `upsilon_j` applied in trial `j`, the
/// resulting error and cost, and the learner quantities of the step that chose
/// `upsilon_j` (TD error of the transition into trial `j`, the variance used to
/// draw it, the step sizes and the updated weights). Those are zero for `j = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub j: usize,
    pub upsilon: DVector<f64>,
    pub x: DVector<f64>,
    pub e_norm2: f64,
    pub cost: f64,
    pub delta: f64,
    pub sigma2: f64,
    pub alpha_w: f64,
    pub alpha_theta: f64,
    pub w: DVector<f64>,
    pub theta: DMatrix<f64>,
}

/// `x = Psi^T e`.
pub fn project_error(psi: &DMatrix<f64>, e: &DVector<f64>) -> DVector<f64> {
    psi.tr_mul(e)
}

/// `V = w^T phi`.
pub fn critic_value(critic: &CriticState, phi: &DVector<f64>) -> f64 {
    critic.w.dot(phi)
}

/// `delta = c + gamma v_next - v_now`.
pub fn td_error(c: f64, v_next: f64, v_now: f64, gamma: f64) -> f64 {
    c + gamma * v_next - v_now
}

/// `w' = w + alpha_w delta phi`.
pub fn critic_update(critic: &CriticState, delta: f64, phi: &DVector<f64>) -> CriticState {
    CriticState { w: &critic.w + phi * (critic.alpha_w * delta), alpha_w: critic.alpha_w }
}

/// `w' = w + alpha_w delta phi / (1 + |phi|^2)`.
pub fn critic_update_normalized(critic: &CriticState, delta: f64, phi: &DVector<f64>) -> CriticState {
    let step = critic.alpha_w * delta / (1.0 + phi.norm_squared());
    CriticState { w: &critic.w + phi * step, alpha_w: critic.alpha_w }
}

/// `mu = theta^T phi`.
pub fn policy_mean(actor: &ActorState, phi: &DVector<f64>) -> DVector<f64> {
    actor.theta.tr_mul(phi)
}

pub fn draw_action(actor: &ActorState, phi: &DVector<f64>, sampler: &mut SeededSampler) -> Result<DVector<f64>, AcilcError> {
    Ok(gaussian_vector(sampler, &policy_mean(actor, phi), actor.sigma2)?)
}

/// `G[a][b] = phi[a] (u[b] - mu[b]) / sigma^2`.
pub fn log_policy_gradient(u: &DVector<f64>, mu: &DVector<f64>, sigma2: f64, phi: &DVector<f64>) -> Result<DMatrix<f64>, AcilcError> {
    if !(sigma2 > 0.0) {
        return Err(AcilcError::ZeroVariance(sigma2));
    }
    Ok(phi * (u - mu).transpose() / sigma2)
}

/// `theta' = theta - alpha_theta delta G`.
pub fn actor_update(actor: &ActorState, delta: f64, grad: &DMatrix<f64>) -> ActorState {
    actor_update_clipped(actor, delta, grad, None)
}

/// As [`actor_update`], with the step's Frobenius norm capped at `max_step`.
pub fn actor_update_clipped(actor: &ActorState, delta: f64, grad: &DMatrix<f64>, max_step: Option<f64>) -> ActorState {
    let mut step = grad * (actor.alpha_theta * delta);
    if let Some(cap) = max_step {
        let n = step.norm();
        if n > cap && n > 0.0 {
            step *= cap / n;
        }
    }
    ActorState { theta: &actor.theta - step, alpha_theta: actor.alpha_theta, sigma2: actor.sigma2 }
}

/// Trial map `e(u) = S r - J Psi u` with `S r` and `J Psi` precomputed.
#[derive(Debug, Clone)]
pub struct TrialModel {
    pub sr: DVector<f64>,
    pub jpsi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
}

impl TrialModel {
    pub fn new(sys: &LiftedSystem, r: &DVector<f64>, basis: &BasisMatrix) -> Self {
        Self { sr: &sys.s * r, jpsi: &sys.j * &basis.columns, psi: basis.columns.clone() }
    }

    pub fn horizon(&self) -> usize {
        self.sr.len()
    }

    pub fn m(&self) -> usize {
        self.psi.ncols()
    }

    pub fn error(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.sr - &self.jpsi * u
    }
}

/// Starting point; `None` means zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Initialization {
    pub upsilon0: Option<DVector<f64>>,
    pub w0: Option<DVector<f64>>,
    pub theta0: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct AcilcRun {
    pub records: Vec<TrialRecord>,
    pub final_error: DVector<f64>,
    pub critic: CriticState,
    pub actor: ActorState,
}

fn finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Execute `num_trials` trials (trial 0 included) of the actor-critic loop.
pub fn run_acilc(
    model: &TrialModel,
    mdp: &MdpConfig,
    learner: &LearnerConfig,
    init: &Initialization,
    sampler: &mut SeededSampler,
    num_trials: usize,
) -> Result<AcilcRun, AcilcError> {
    let m = model.m();
    let fm = &learner.features;
    if fm.m() != m || mdp.m != m {
        return Err(AcilcError::Config(format!("feature scale has {} entries, basis has m = {m}", fm.m())));
    }
    for (s, name) in [(&learner.alpha_w, "alpha_w"), (&learner.alpha_theta, "alpha_theta"), (&learner.sigma, "sigma")] {
        s.validate(name).map_err(AcilcError::Config)?;
    }
    let mut u = init.upsilon0.clone().unwrap_or_else(|| DVector::zeros(m));
    let mut critic = CriticState { w: init.w0.clone().unwrap_or_else(|| DVector::zeros(fm.critic_dim())), alpha_w: 0.0 };
    let mut actor = ActorState {
        theta: init.theta0.clone().unwrap_or_else(|| DMatrix::zeros(fm.actor_dim(), m)),
        alpha_theta: 0.0,
        sigma2: 0.0,
    };
    if u.len() != m || critic.w.len() != fm.critic_dim() || actor.theta.shape() != (fm.actor_dim(), m) {
        return Err(AcilcError::Config("initial state has the wrong dimensions".into()));
    }
    let w = &mdp.weights;
    let mut e = model.error(&u);
    let mut x = project_error(&model.psi, &e);
    let mut records = Vec::with_capacity(num_trials);
    if num_trials == 0 {
        return Ok(AcilcRun { records, final_error: e, critic, actor });
    }
    let c_first = trial_cost(&e, &u, &u, w)?;
    let scale = match learner.cost_normalization {
        CostNormalization::InitialCost if c_first > 0.0 => 1.0 / c_first,
        _ => 1.0,
    };
    records.push(TrialRecord {
        j: 0,
        upsilon: u.clone(),
        x: x.clone(),
        e_norm2: e.norm(),
        cost: c_first,
        delta: 0.0,
        sigma2: 0.0,
        alpha_w: 0.0,
        alpha_theta: 0.0,
        w: critic.w.clone(),
        theta: actor.theta.clone(),
    });

    for j in 0..num_trials - 1 {
        critic.alpha_w = learner.alpha_w.value(j);
        actor.alpha_theta = learner.alpha_theta.value(j);
        let sigma = learner.sigma.value(j);
        actor.sigma2 = sigma * sigma;

        let phi_a = fm.actor_features(&x);
        let mu = policy_mean(&actor, &phi_a);
        let u_next = gaussian_vector(sampler, &mu, actor.sigma2)?;
        let e_next = model.error(&u_next);
        let x_next = project_error(&model.psi, &e_next);

        let c = scale * trial_cost(&e, &u, &u_next, w)?;
        let phi_c = fm.critic_features(&x);
        let phi_c_next = fm.critic_features(&x_next);
        let delta = td_error(c, critic_value(&critic, &phi_c_next), critic_value(&critic, &phi_c), mdp.gamma);

        critic = match learner.critic_step {
            CriticStep::Plain => critic_update(&critic, delta, &phi_c),
            CriticStep::Normalized => critic_update_normalized(&critic, delta, &phi_c),
        };
        if actor.sigma2 > 0.0 {
            let grad = log_policy_gradient(&u_next, &mu, actor.sigma2, &phi_a)?;
            actor = actor_update_clipped(&actor, delta, &grad, learner.actor_step_clip.map(|k| k * sigma));
        }

        let cost = trial_cost(&e_next, &u, &u_next, w)?;
        let ok = delta.is_finite()
            && cost.is_finite()
            && finite_vec(&u_next)
            && finite_vec(&critic.w)
            && actor.theta.iter().all(|v| v.is_finite());
        if !ok {
            return Err(AcilcError::Diverged { trial: j + 1 });
        }
        records.push(TrialRecord {
            j: j + 1,
            upsilon: u_next.clone(),
            x: x_next.clone(),
            e_norm2: e_next.norm(),
            cost,
            delta,
            sigma2: actor.sigma2,
            alpha_w: critic.alpha_w,
            alpha_theta: actor.alpha_theta,
            w: critic.w.clone(),
            theta: actor.theta.clone(),
        });
        u = u_next;
        e = e_next;
        x = x_next;
    }
    Ok(AcilcRun { records, final_error: e, critic, actor })
}

//! Experiment orchestration: build the lifted system once, run NOILC and/or the
//! actor-critic learner (one thread per seed), write logs, metadata and a summary.
//!
//! Output layout under the output directory:
//!
//! ```text
//! metadata.toml              config echo + [derived]
//! summary.csv                one row per run
//! noilc/log.csv              (+ e_final.csv, f_final.csv)
//! noilc/gains.csv
//! acilc/seed_<s>/log.csv     (+ e_final.csv, f_final.csv)
//! ```

pub mod config;
pub mod log;

pub use config::{load_config, parse_config, preset, ConfigError, ExperimentConfig, LoadedConfig, Method};
pub use log::{compare_runs, read_log, Comparison, LogError, LogRow, MethodKind, RunSummary, TrialLog};

use crate::acilc::{run_acilc, AcilcError, FeatureMap, Initialization, LearnerConfig, MdpConfig, TrialModel};
use crate::harness::config::{BasisKind, BasisScaling, LearnerInit, RepairConfig, TfConfig};
use crate::lti_core::{closed_loop_maps, LiftedSystem, LtiError, TransferFunction};
use crate::noilc::{fixed_point, noilc_update, synthesize_from_jpsi, NoilcError, NoilcGains};
use crate::numerics::{trial_cost, NumericsError, SeededSampler, Weighting, SAMPLER_ALGORITHM};
use crate::trajectory::{build_basis, third_order_reference, BasisMatrix, ReferenceProfile, Segment, TrajectoryError};
use nalgebra::{DMatrix, DVector};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{what}: {source}")]
    Lti { what: String, source: LtiError },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("NOILC synthesis failed: {0}")]
    Noilc(#[from] NoilcError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

fn lti(what: &str) -> impl Fn(LtiError) -> HarnessError + '_ {
    move |source| HarnessError::Lti { what: what.to_string(), source }
}

/// Build a transfer function and apply its configured repair steps. Returns the
/// result and a description of each step.
pub fn build_transfer_function(name: &str, cfg: &TfConfig) -> Result<(TransferFunction, Vec<String>), HarnessError> {
    let mut tf = TransferFunction::new(&cfg.numerator, &cfg.denominator, cfg.sample_time_s).map_err(lti(name))?;
    let notes = apply_repair(name, &mut tf, &cfg.repair)?;
    Ok((tf, notes))
}

fn apply_repair(name: &str, tf: &mut TransferFunction, r: &RepairConfig) -> Result<Vec<String>, HarnessError> {
    let mut notes = Vec::new();
    for &root in &r.snap_denominator_roots {
        let (next, delta) = tf.snap_denominator_root(root, &r.denominator_bounds).map_err(lti(name))?;
        notes.push(format!("{name}: snapped denominator root to z = {root}; coefficient changes {delta:?}"));
        *tf = next;
    }
    for &root in &r.cancel_common_roots {
        *tf = tf.cancel_common_root(root, r.cancel_tolerance).map_err(lti(name))?;
        notes.push(format!("{name}: cancelled common factor (z - ({root}))"));
    }
    Ok(notes)
}

/// Everything that depends only on the configuration, built once per experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub plant: TransferFunction,
    pub controller: TransferFunction,
    pub repairs: Vec<String>,
    pub lifted: LiftedSystem,
    pub reference: ReferenceProfile,
    pub basis: BasisMatrix,
    /// Column divisors applied to the raw basis (all ones without scaling).
    pub basis_scales: Vec<f64>,
    pub weights: Weighting,
    pub model: TrialModel,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    cfg.validate()?;
    let (plant, mut repairs) = build_transfer_function("plant", &cfg.plant)?;
    let (controller, more) = build_transfer_function("controller", &cfg.controller)?;
    repairs.extend(more);
    let n = cfg.horizon_samples;
    let lifted = closed_loop_maps(&plant, &controller, n).map_err(lti("closed loop"))?;
    let segments: Vec<Segment> = cfg.reference.segments.iter().map(|&s| s.into()).collect();
    let reference = third_order_reference(&segments, plant.sample_time(), n)?;
    let raw = match cfg.basis.kind {
        BasisKind::Derivative => build_basis(&reference)?,
        BasisKind::Identity => BasisMatrix::identity(n),
    };
    let (basis, basis_scales) = match cfg.basis.scaling {
        BasisScaling::None => {
            let m = raw.m();
            (raw, vec![1.0; m])
        }
        BasisScaling::MaxAbs => raw.normalized_max_abs(),
    };
    let weights = cfg.weighting().map_err(|e| ConfigError::Invalid(vec![e]))?;
    let model = TrialModel::new(&lifted, &reference.samples, &basis);
    Ok(Prepared { plant, controller, repairs, lifted, reference, basis, basis_scales, weights, model })
}

/// Noise-free NOILC iteration for `num_trials` trials (trial 0 at `upsilon = 0`).
pub fn run_noilc(model: &TrialModel, gains: &NoilcGains, weights: &Weighting, num_trials: usize) -> Result<TrialLog, HarnessError> {
    let m = model.m();
    let mut u = DVector::zeros(m);
    let mut u_prev = DVector::zeros(m);
    let mut rows = Vec::with_capacity(num_trials);
    let mut last_e = None;
    for j in 0..num_trials {
        let e = model.error(&u);
        rows.push(LogRow {
            j,
            cost: trial_cost(&e, &u_prev, &u, weights)?,
            e_norm2: e.norm(),
            upsilon: u.iter().copied().collect(),
            delta: 0.0,
            sigma2: 0.0,
            alpha_w: 0.0,
            alpha_theta: 0.0,
        });
        let next = noilc_update(gains, &u, &e)?;
        u_prev = std::mem::replace(&mut u, next);
        last_e = Some(e);
    }
    let final_feedforward = rows.last().map(|r| &model.psi * DVector::from_vec(r.upsilon.clone()));
    Ok(TrialLog {
        method: MethodKind::Noilc,
        seed: None,
        rows,
        final_error: last_e,
        final_feedforward,
        convergence_margin: Some(gains.convergence_margin),
    })
}

pub fn learner_config(cfg: &ExperimentConfig, m: usize) -> LearnerConfig {
    let a = &cfg.acilc;
    let scale = if a.feature_scale.is_empty() { vec![1.0; m] } else { a.feature_scale.clone() };
    LearnerConfig {
        alpha_w: a.alpha_w,
        alpha_theta: a.alpha_theta,
        sigma: a.sigma,
        features: FeatureMap { critic: a.critic_features, actor: a.actor_features, scale: DVector::from_vec(scale) },
        critic_step: a.critic_step,
        actor_step_clip: (a.actor_step_clip_sigma > 0.0).then_some(a.actor_step_clip_sigma),
        cost_normalization: a.cost_normalization,
    }
}

/// One seed of the actor-critic learner.
pub fn run_acilc_seed(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    fixed: Option<&DVector<f64>>,
    seed: u64,
    num_trials: usize,
) -> Result<TrialLog, AcilcError> {
    let m = prep.model.m();
    let mdp = MdpConfig::new(cfg.acilc.gamma, prep.weights.clone(), prep.model.horizon(), m)?;
    let learner = learner_config(cfg, m);
    let init = match (cfg.acilc.init, fixed) {
        (LearnerInit::NoilcFixedPoint, Some(u)) => {
            let x = crate::acilc::project_error(&prep.model.psi, &prep.model.error(u));
            Initialization { upsilon0: Some(u.clone()), w0: None, theta0: Some(learner.features.theta_for_action(&x, u)) }
        }
        _ => Initialization::default(),
    };
    let mut sampler = SeededSampler::new(seed);
    let run = run_acilc(&prep.model, &mdp, &learner, &init, &mut sampler, num_trials)?;
    let final_feedforward = run.records.last().map(|r| &prep.model.psi * &r.upsilon);
    Ok(TrialLog {
        method: MethodKind::Acilc,
        seed: Some(seed),
        rows: run.records.iter().map(LogRow::from).collect(),
        final_error: run.records.last().map(|_| run.final_error.clone()),
        final_feedforward,
        convergence_margin: None,
    })
}

#[derive(Debug, Clone)]
pub struct NoilcOutcome {
    pub gains: NoilcGains,
    pub fixed_point: Option<DVector<f64>>,
    pub log: TrialLog,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub result: Result<TrialLog, AcilcError>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub defaulted: Vec<String>,
    pub repairs: Vec<String>,
    pub spectral_radius: f64,
    pub basis_scales: Vec<f64>,
    pub noilc: Option<NoilcOutcome>,
    pub acilc: Vec<SeedOutcome>,
}

/// Run every configured method. NOILC failures abort; a diverging seed only
/// marks that seed.
pub fn run_experiment(loaded: &LoadedConfig) -> Result<ExperimentResult, HarnessError> {
    let cfg = &loaded.config;
    let prep = prepare(cfg)?;
    let needs_gains = cfg.method.runs_noilc() || cfg.acilc.init == LearnerInit::NoilcFixedPoint;
    let gains = if needs_gains { Some(synthesize_from_jpsi(&prep.model.jpsi, &prep.weights)?) } else { None };
    let fixed = gains.as_ref().and_then(|g| fixed_point(g, &prep.model.sr, &prep.model.jpsi));
    let noilc = match (&gains, cfg.method.runs_noilc()) {
        (Some(g), true) => Some(NoilcOutcome {
            gains: g.clone(),
            fixed_point: fixed.clone(),
            log: run_noilc(&prep.model, g, &prep.weights, cfg.num_trials)?,
        }),
        _ => None,
    };
    let acilc = if cfg.method.runs_acilc() {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let (prep, fixed) = (&prep, fixed.as_ref());
                    s.spawn(move || SeedOutcome { seed, result: run_acilc_seed(prep, cfg, fixed, seed, cfg.num_trials) })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("seed worker panicked")).collect()
        })
    } else {
        Vec::new()
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        defaulted: loaded.defaulted.clone(),
        repairs: prep.repairs,
        spectral_radius: prep.lifted.spectral_radius,
        basis_scales: prep.basis_scales,
        noilc,
        acilc,
    })
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io { path: path.display().to_string(), msg: e.to_string() }
}

fn float_array(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect())
}

impl ExperimentResult {
    pub fn summaries(&self) -> Vec<(RunSummary, Option<String>)> {
        let mut out = Vec::new();
        if let Some(n) = &self.noilc {
            if let Ok(s) = RunSummary::from_log(&n.log) {
                out.push((s, None));
            }
        }
        for so in &self.acilc {
            match &so.result {
                Ok(log) => {
                    if let Ok(s) = RunSummary::from_log(log) {
                        out.push((s, None));
                    }
                }
                Err(e) => out.push((
                    RunSummary {
                        method: MethodKind::Acilc,
                        seed: Some(so.seed),
                        final_cost: f64::NAN,
                        min_cost: f64::NAN,
                        convergence_trial: 0,
                        final_upsilon: vec![],
                        convergence_margin: None,
                    },
                    Some(e.to_string()),
                )),
            }
        }
        out
    }

    /// Metadata: the configuration as run plus a `[derived]` table.
    pub fn metadata(&self) -> toml::Table {
        let mut t = self.config.to_toml();
        let mut d = toml::Table::new();
        d.insert("code_version".into(), env!("CARGO_PKG_VERSION").into());
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        d.insert("timestamp_unix_s".into(), toml::Value::Integer(now as i64));
        d.insert("sampler_algorithm".into(), SAMPLER_ALGORITHM.into());
        d.insert("closed_loop_spectral_radius".into(), toml::Value::Float(self.spectral_radius));
        d.insert("basis_column_divisors".into(), float_array(&self.basis_scales));
        d.insert("repairs".into(), toml::Value::Array(self.repairs.iter().map(|s| s.clone().into()).collect()));
        d.insert("defaulted_fields".into(), toml::Value::Array(self.defaulted.iter().map(|s| s.clone().into()).collect()));
        if let Some(n) = &self.noilc {
            d.insert("convergence_margin".into(), toml::Value::Float(n.gains.convergence_margin));
            if let Some(u) = &n.fixed_point {
                d.insert("noilc_fixed_point".into(), float_array(u.as_slice()));
            }
        }
        let diverged: Vec<toml::Value> = self
            .acilc
            .iter()
            .filter_map(|s| s.result.as_ref().err().map(|e| format!("seed {}: {e}", s.seed).into()))
            .collect();
        d.insert("diverged_seeds".into(), toml::Value::Array(diverged));
        t.insert(config::DERIVED_KEY.into(), toml::Value::Table(d));
        t
    }

    pub fn write(&self, out: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(out).map_err(io(out))?;
        if let Some(n) = &self.noilc {
            n.log.export_csv(&out.join("noilc").join("log.csv"))?;
            n.gains.write_csv(&out.join("noilc").join("gains.csv"))?;
        }
        for so in &self.acilc {
            if let Ok(log) = &so.result {
                log.export_csv(&out.join("acilc").join(format!("seed_{}", so.seed)).join("log.csv"))?;
            }
        }
        let meta = out.join("metadata.toml");
        let text = toml::to_string(&self.metadata()).map_err(|e| HarnessError::Io { path: meta.display().to_string(), msg: e.to_string() })?;
        std::fs::write(&meta, text).map_err(io(&meta))?;

        let path = out.join("summary.csv");
        let m = self.summaries().iter().map(|(s, _)| s.final_upsilon.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_path(&path).map_err(|e| HarnessError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let mut header: Vec<String> =
            ["method", "seed", "final_cost", "min_cost", "convergence_trial", "convergence_margin", "status"].map(String::from).to_vec();
        header.extend((0..m).map(|i| format!("final_upsilon_{i}")));
        let werr = |e: csv::Error| HarnessError::Io { path: path.display().to_string(), msg: e.to_string() };
        w.write_record(&header).map_err(werr)?;
        for (s, err) in self.summaries() {
            let mut rec = vec![
                s.method.to_string(),
                s.seed.map(|x| x.to_string()).unwrap_or_default(),
                s.final_cost.to_string(),
                s.min_cost.to_string(),
                s.convergence_trial.to_string(),
                s.convergence_margin.map(|x| x.to_string()).unwrap_or_default(),
                err.unwrap_or_else(|| "ok".into()),
            ];
            rec.extend((0..m).map(|i| s.final_upsilon.get(i).map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).map_err(werr)?;
        }
        w.flush().map_err(|e| HarnessError::Io { path: path.display().to_string(), msg: e.to_string() })
    }
}

/// `Q`, `L` and the margin for a configuration, without running trials.
pub fn gains_for(cfg: &ExperimentConfig) -> Result<(Prepared, NoilcGains), HarnessError> {
    let prep = prepare(cfg)?;
    let g = synthesize_from_jpsi(&prep.model.jpsi, &prep.weights)?;
    Ok((prep, g))
}

/// `f = Psi u` for every row's parameters (handy for plotting).
pub fn feedforward_history(psi: &DMatrix<f64>, log: &TrialLog) -> Vec<DVector<f64>> {
    log.rows.iter().map(|r| psi * DVector::from_column_slice(&r.upsilon)).collect()
}

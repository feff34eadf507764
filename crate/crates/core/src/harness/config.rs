//! Experiment configuration (TOML). Unknown keys are rejected, every omitted
//! field gets a default, and the full configuration is echoed into run metadata.

use crate::acilc::{ActorFeatures, CostNormalization, CriticFeatures, CriticStep, DecaySchedule};
use crate::numerics::{Weight, Weighting};
use crate::trajectory::{default_segments, Segment};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("unknown preset '{0}' (available: paper_sec5)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairConfig {
    /// Roots moved onto the denominator exactly (bound-weighted least change).
    #[serde(default)]
    pub snap_denominator_roots: Vec<f64>,
    /// Per-coefficient bounds on that change, one per denominator coefficient.
    #[serde(default)]
    pub denominator_bounds: Vec<f64>,
    /// Roots divided out of numerator and denominator after snapping.
    #[serde(default)]
    pub cancel_common_roots: Vec<f64>,
    #[serde(default = "d_cancel_tol")]
    pub cancel_tolerance: f64,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self { snap_denominator_roots: vec![], denominator_bounds: vec![], cancel_common_roots: vec![], cancel_tolerance: d_cancel_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfConfig {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub sample_time_s: f64,
    #[serde(default)]
    pub repair: RepairConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub displacement: f64,
    pub max_velocity_per_s: f64,
    pub max_acceleration_per_s2: f64,
    pub max_jerk_per_s3: f64,
    pub rest_s: f64,
}

impl From<SegmentConfig> for Segment {
    fn from(s: SegmentConfig) -> Self {
        Segment::new(s.displacement, s.max_velocity_per_s, s.max_acceleration_per_s2, s.max_jerk_per_s3, s.rest_s)
    }
}

impl From<Segment> for SegmentConfig {
    fn from(s: Segment) -> Self {
        Self {
            displacement: s.displacement,
            max_velocity_per_s: s.max_velocity,
            max_acceleration_per_s2: s.max_acceleration,
            max_jerk_per_s3: s.max_jerk,
            rest_s: s.rest_duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default = "d_segments")]
    pub segments: Vec<SegmentConfig>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { segments: d_segments() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `[acceleration, velocity]`
    #[default]
    Derivative,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BasisScaling {
    #[default]
    None,
    /// Each column divided by its largest absolute entry.
    MaxAbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default)]
    pub kind: BasisKind,
    #[serde(default)]
    pub scaling: BasisScaling,
}

/// Scalar (times identity) or full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl WeightSpec {
    pub fn to_weight(&self) -> Result<Weight, String> {
        match self {
            WeightSpec::Scalar(s) => Ok(Weight::Scalar(*s)),
            WeightSpec::Matrix(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err("matrix weight must be square".into());
                }
                Ok(Weight::Full(DMatrix::from_fn(n, n, |i, k| rows[i][k])))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default = "d_we")]
    pub w_e: WeightSpec,
    #[serde(default = "d_wu")]
    pub w_upsilon: WeightSpec,
    #[serde(default = "d_wdu")]
    pub w_delta_upsilon: WeightSpec,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self { w_e: d_we(), w_upsilon: d_wu(), w_delta_upsilon: d_wdu() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Noilc,
    Acilc,
    #[default]
    Both,
}

impl Method {
    pub fn runs_noilc(self) -> bool {
        matches!(self, Method::Noilc | Method::Both)
    }

    pub fn runs_acilc(self) -> bool {
        matches!(self, Method::Acilc | Method::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LearnerInit {
    /// `upsilon_0 = 0`, `w_0 = 0`, `theta_0 = 0`.
    #[default]
    Zero,
    /// Start at the NOILC fixed point with `theta_0` reproducing it.
    NoilcFixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcilcConfig {
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    #[serde(default = "d_alpha_w")]
    pub alpha_w: DecaySchedule,
    #[serde(default = "d_alpha_theta")]
    pub alpha_theta: DecaySchedule,
    /// Exploration standard deviation schedule.
    #[serde(default = "d_sigma")]
    pub sigma: DecaySchedule,
    #[serde(default = "d_critic_features")]
    pub critic_features: CriticFeatures,
    #[serde(default = "d_actor_features")]
    pub actor_features: ActorFeatures,
    /// Diagonal state scaling; empty means all ones.
    #[serde(default)]
    pub feature_scale: Vec<f64>,
    #[serde(default = "d_critic_step")]
    pub critic_step: CriticStep,
    /// Zero disables clipping.
    #[serde(default)]
    pub actor_step_clip_sigma: f64,
    #[serde(default = "d_cost_norm")]
    pub cost_normalization: CostNormalization,
    #[serde(default)]
    pub init: LearnerInit,
}

impl Default for AcilcConfig {
    fn default() -> Self {
        Self {
            gamma: d_gamma(),
            alpha_w: d_alpha_w(),
            alpha_theta: d_alpha_theta(),
            sigma: d_sigma(),
            critic_features: d_critic_features(),
            actor_features: d_actor_features(),
            feature_scale: vec![],
            critic_step: d_critic_step(),
            actor_step_clip_sigma: 0.0,
            cost_normalization: d_cost_norm(),
            init: LearnerInit::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "d_name")]
    pub name: String,
    #[serde(default = "d_horizon")]
    pub horizon_samples: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "d_trials")]
    pub num_trials: usize,
    #[serde(default = "d_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "d_out")]
    pub output_dir: String,
    pub plant: TfConfig,
    pub controller: TfConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub acilc: AcilcConfig,
}

fn d_cancel_tol() -> f64 {
    1e-9
}
fn d_segments() -> Vec<SegmentConfig> {
    default_segments().into_iter().map(Into::into).collect()
}
fn d_we() -> WeightSpec {
    WeightSpec::Scalar(1e6)
}
fn d_wu() -> WeightSpec {
    WeightSpec::Scalar(1e-6)
}
fn d_wdu() -> WeightSpec {
    WeightSpec::Scalar(0.0)
}
fn d_gamma() -> f64 {
    0.9
}
fn d_alpha_w() -> DecaySchedule {
    DecaySchedule::new(0.05, 0.95, 1e-4)
}
fn d_alpha_theta() -> DecaySchedule {
    DecaySchedule::new(0.01, 0.95, 1e-5)
}
fn d_sigma() -> DecaySchedule {
    DecaySchedule::new(0.01, 0.9, 1e-4)
}
fn d_critic_features() -> CriticFeatures {
    CriticFeatures::Linear
}
fn d_actor_features() -> ActorFeatures {
    ActorFeatures::State
}
fn d_critic_step() -> CriticStep {
    CriticStep::Plain
}
fn d_cost_norm() -> CostNormalization {
    CostNormalization::None
}
fn d_name() -> String {
    "experiment".into()
}
fn d_horizon() -> usize {
    2000
}
fn d_trials() -> usize {
    40
}
fn d_seeds() -> Vec<u64> {
    vec![0]
}
fn d_out() -> String {
    "out".into()
}

pub const PAPER_SEC5: &str = include_str!("../../presets/paper_sec5.toml");

/// Name of the table added to metadata files; ignored when loading.
pub const DERIVED_KEY: &str = "derived";

/// Parsed configuration plus the dotted paths that were filled by defaults.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub defaulted: Vec<String>,
}

fn leaf_paths(prefix: &str, v: &toml::Value, out: &mut BTreeSet<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaf_paths(&p, v, out);
            }
        }
        _ => {
            out.insert(prefix.to_string());
        }
    }
}

pub fn parse_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    table.remove(DERIVED_KEY);
    let raw = toml::Value::Table(table);
    let config: ExperimentConfig = raw.clone().try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    let full = toml::Value::try_from(&config).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let (mut given, mut all) = (BTreeSet::new(), BTreeSet::new());
    leaf_paths("", &raw, &mut given);
    leaf_paths("", &full, &mut all);
    let defaulted = all
        .into_iter()
        .filter(|p| !given.contains(p) && !given.iter().any(|g| p.starts_with(&format!("{g}."))))
        .collect();
    Ok(LoadedConfig { config, defaulted })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

pub fn preset(name: &str) -> Result<LoadedConfig, ConfigError> {
    match name {
        "paper_sec5" => parse_config(PAPER_SEC5),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}

impl ExperimentConfig {
    pub fn basis_dim(&self) -> usize {
        match self.basis.kind {
            BasisKind::Derivative => 2,
            BasisKind::Identity => self.horizon_samples,
        }
    }

    pub fn weighting(&self) -> Result<Weighting, String> {
        let we = self.weights.w_e.to_weight().map_err(|e| format!("weights.w_e: {e}"))?;
        let wu = self.weights.w_upsilon.to_weight().map_err(|e| format!("weights.w_upsilon: {e}"))?;
        let wdu = self.weights.w_delta_upsilon.to_weight().map_err(|e| format!("weights.w_delta_upsilon: {e}"))?;
        Weighting::new(we, wu, wdu).map_err(|e| format!("weights: {e}"))
    }

    /// Check every field; all problems are reported together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.horizon_samples < 3 {
            errs.push(format!("horizon_samples: must be >= 3, got {}", self.horizon_samples));
        }
        if self.method.runs_acilc() && self.seeds.is_empty() {
            errs.push("seeds: at least one seed is needed for acilc".into());
        }
        for (name, tf) in [("plant", &self.plant), ("controller", &self.controller)] {
            if !(tf.sample_time_s > 0.0 && tf.sample_time_s.is_finite()) {
                errs.push(format!("{name}.sample_time_s: must be positive, got {}", tf.sample_time_s));
            }
            if tf.denominator.iter().all(|&c| c == 0.0) {
                errs.push(format!("{name}.denominator: must have a nonzero coefficient"));
            }
            if tf.numerator.iter().chain(&tf.denominator).any(|c| !c.is_finite()) {
                errs.push(format!("{name}: coefficients must be finite"));
            }
            let r = &tf.repair;
            if !r.snap_denominator_roots.is_empty() && r.denominator_bounds.len() != tf.denominator.len() {
                errs.push(format!(
                    "{name}.repair.denominator_bounds: need {} entries, got {}",
                    tf.denominator.len(),
                    r.denominator_bounds.len()
                ));
            }
            if r.denominator_bounds.iter().any(|b| !(*b >= 0.0)) {
                errs.push(format!("{name}.repair.denominator_bounds: must be >= 0"));
            }
        }
        if (self.plant.sample_time_s - self.controller.sample_time_s).abs() > 1e-15 {
            errs.push("controller.sample_time_s: must equal plant.sample_time_s".into());
        }
        for (i, s) in self.reference.segments.iter().enumerate() {
            if [s.max_velocity_per_s, s.max_acceleration_per_s2, s.max_jerk_per_s3].iter().any(|b| !(*b > 0.0)) {
                errs.push(format!("reference.segments[{i}]: velocity, acceleration and jerk bounds must be positive"));
            }
            if !(s.rest_s >= 0.0) {
                errs.push(format!("reference.segments[{i}].rest_s: must be >= 0"));
            }
        }
        if let Err(e) = self.weighting() {
            errs.push(e);
        }
        let a = &self.acilc;
        if !(a.gamma > 0.0 && a.gamma <= 1.0) {
            errs.push(format!("acilc.gamma: must lie in (0, 1], got {}", a.gamma));
        }
        for (s, n) in [(&a.alpha_w, "acilc.alpha_w"), (&a.alpha_theta, "acilc.alpha_theta"), (&a.sigma, "acilc.sigma")] {
            if let Err(e) = s.validate(n) {
                errs.push(e);
            }
        }
        if !a.feature_scale.is_empty() && a.feature_scale.len() != self.basis_dim() {
            errs.push(format!("acilc.feature_scale: need {} entries, got {}", self.basis_dim(), a.feature_scale.len()));
        }
        if a.feature_scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            errs.push("acilc.feature_scale: entries must be positive".into());
        }
        if !(a.actor_step_clip_sigma >= 0.0 && a.actor_step_clip_sigma.is_finite()) {
            errs.push("acilc.actor_step_clip_sigma: must be >= 0 (0 disables)".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn to_toml(&self) -> toml::Table {
        match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            _ => toml::Table::new(),
        }
    }
}

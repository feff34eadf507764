//! Third-order (jerk-limited) point-to-point references and the derivative basis
//! `Psi(r) = [d2r/dt2, dr/dt]`.

use nalgebra::{DMatrix, DVector};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("segment {index}: {msg}")]
    BadSegment { index: usize, msg: String },
    #[error("moves need {needed_s} s but the horizon only covers {available_s} s")]
    DoesNotFit { needed_s: f64, available_s: f64 },
    #[error("signal needs at least 3 samples, got {0}")]
    TooShort(usize),
    #[error("derivative order must be 1 or 2, got {0}")]
    BadOrder(u8),
    #[error("sample time must be positive, got {0}")]
    BadSampleTime(f64),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One point-to-point move followed by a rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub displacement: f64,
    pub max_velocity: f64,
    pub max_acceleration: f64,
    pub max_jerk: f64,
    pub rest_duration: f64,
}

impl Segment {
    pub fn new(displacement: f64, max_velocity: f64, max_acceleration: f64, max_jerk: f64, rest_duration: f64) -> Self {
        Self { displacement, max_velocity, max_acceleration, max_jerk, rest_duration }
    }
}

/// Default move: 0.1 units in 0.25 s, then 0.1 s of rest.
pub fn default_segments() -> Vec<Segment> {
    vec![Segment::new(0.1, 0.7, 8.0, 400.0, 0.1); 2]
}

/// Seven constant-jerk phases of a symmetric move.
#[derive(Debug, Clone, PartialEq)]
pub struct MovePhases {
    /// `(jerk, duration)` per phase.
    pub phases: [(f64, f64); 7],
    pub peak_velocity: f64,
    pub peak_acceleration: f64,
}

impl MovePhases {
    pub fn duration(&self) -> f64 {
        self.phases.iter().map(|p| p.1).sum()
    }
}

/// Phase durations for a rest-to-rest move of length `d >= 0`.
pub fn plan_move(d: f64, v: f64, a: f64, j: f64) -> MovePhases {
    let (mut tj, mut ta) = if v * j < a * a { ((v / j).sqrt(), 0.0) } else { (a / j, v / a - a / j) };
    let mut tv;
    if d >= v * (2.0 * tj + ta) {
        tv = (d - v * (2.0 * tj + ta)) / v;
    } else {
        tv = 0.0;
        let mut done = false;
        if ta > 0.0 {
            let vp = (-tj + (tj * tj + 4.0 * d / a).sqrt()) * a / 2.0;
            if vp >= a * a / j {
                ta = vp / a - tj;
                done = true;
            }
        }
        if !done {
            tj = (d / (2.0 * j)).cbrt();
            ta = 0.0;
        }
    }
    if d == 0.0 {
        tj = 0.0;
        ta = 0.0;
        tv = 0.0;
    }
    let phases = [(j, tj), (0.0, ta), (-j, tj), (0.0, tv), (-j, tj), (0.0, ta), (j, tj)];
    let peak_acceleration = j * tj;
    let peak_velocity = peak_acceleration * (tj + ta);
    MovePhases { phases, peak_velocity, peak_acceleration }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProfile {
    pub samples: DVector<f64>,
    pub sample_time: f64,
    pub segments: Vec<Segment>,
}

impl ReferenceProfile {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TrajectoryError> {
        write_column(path, "r", self.samples.as_slice())
    }
}

pub(crate) fn write_column(path: &Path, header: &str, values: &[f64]) -> Result<(), TrajectoryError> {
    let io = |source| TrajectoryError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(out, "{header}").map_err(io)?;
    for v in values {
        writeln!(out, "{v}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Sample a sequence of jerk-limited moves on the grid `t_k = k Ts`.
///
/// Each move starts when the previous move and its rest are over. Samples after
/// a move hold the exact cumulative displacement.
pub fn third_order_reference(segments: &[Segment], sample_time: f64, horizon: usize) -> Result<ReferenceProfile, TrajectoryError> {
    if !(sample_time > 0.0 && sample_time.is_finite()) {
        return Err(TrajectoryError::BadSampleTime(sample_time));
    }
    let mut plans = Vec::with_capacity(segments.len());
    for (index, s) in segments.iter().enumerate() {
        let bad = |msg: &str| TrajectoryError::BadSegment { index, msg: msg.to_string() };
        let bounds = [s.max_velocity, s.max_acceleration, s.max_jerk];
        if bounds.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(bad("velocity, acceleration and jerk bounds must be positive"));
        }
        if !s.displacement.is_finite() {
            return Err(bad("displacement must be finite"));
        }
        if !(s.rest_duration >= 0.0 && s.rest_duration.is_finite()) {
            return Err(bad("rest duration must be nonnegative"));
        }
        plans.push(plan_move(s.displacement.abs(), s.max_velocity, s.max_acceleration, s.max_jerk));
    }
    let needed: f64 = plans.iter().zip(segments).map(|(p, s)| p.duration() + s.rest_duration).sum();
    let available = horizon as f64 * sample_time;
    if needed > available {
        return Err(TrajectoryError::DoesNotFit { needed_s: needed, available_s: available });
    }

    let mut r = DVector::zeros(horizon);
    let (mut t0, mut p0) = (0.0, 0.0);
    for (plan, seg) in plans.iter().zip(segments) {
        let sign = seg.displacement.signum();
        // Phase start states (t, p, v, a, jerk), relative to the move origin.
        let mut starts = Vec::with_capacity(7);
        let (mut t, mut p, mut v, mut a) = (0.0, 0.0, 0.0, 0.0);
        for &(jk, dt) in &plan.phases {
            starts.push((t, p, v, a, jk));
            p += v * dt + a * dt * dt / 2.0 + jk * dt * dt * dt / 6.0;
            v += a * dt + jk * dt * dt / 2.0;
            a += jk * dt;
            t += dt;
        }
        let t_end = t;
        for k in 0..horizon {
            let tk = k as f64 * sample_time - t0;
            if tk < 0.0 {
                continue;
            }
            r[k] = if tk >= t_end {
                p0 + seg.displacement
            } else {
                let &(ts, ps, vs, as_, js) = starts.iter().rev().find(|st| tk >= st.0).unwrap_or(&starts[0]);
                let s = tk - ts;
                p0 + sign * (ps + vs * s + as_ * s * s / 2.0 + js * s * s * s / 6.0)
            };
        }
        t0 += t_end + seg.rest_duration;
        p0 += seg.displacement;
    }
    Ok(ReferenceProfile { samples: r, sample_time, segments: segments.to_vec() })
}

/// Central differences inside, one-sided differences at both ends.
///
/// Order 1: `(x[k+1] - x[k-1]) / 2Ts`, ends `(x[1]-x[0])/Ts`, `(x[N-1]-x[N-2])/Ts`.
/// Order 2: `(x[k+1] - 2x[k] + x[k-1]) / Ts^2`, ends use the forward/backward
/// second difference over the first/last three samples.
pub fn discrete_derivative(x: &DVector<f64>, sample_time: f64, order: u8) -> Result<DVector<f64>, TrajectoryError> {
    let n = x.len();
    if n < 3 {
        return Err(TrajectoryError::TooShort(n));
    }
    if !(sample_time > 0.0) {
        return Err(TrajectoryError::BadSampleTime(sample_time));
    }
    let ts = sample_time;
    let mut d = DVector::zeros(n);
    match order {
        1 => {
            for k in 1..n - 1 {
                d[k] = (x[k + 1] - x[k - 1]) / (2.0 * ts);
            }
            d[0] = (x[1] - x[0]) / ts;
            d[n - 1] = (x[n - 1] - x[n - 2]) / ts;
        }
        2 => {
            let ts2 = ts * ts;
            for k in 1..n - 1 {
                d[k] = (x[k + 1] - 2.0 * x[k] + x[k - 1]) / ts2;
            }
            d[0] = (x[2] - 2.0 * x[1] + x[0]) / ts2;
            d[n - 1] = (x[n - 1] - 2.0 * x[n - 2] + x[n - 3]) / ts2;
        }
        o => return Err(TrajectoryError::BadOrder(o)),
    }
    Ok(d)
}

/// `N x m` feedforward basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    pub columns: DMatrix<f64>,
    pub labels: Vec<String>,
    pub source_reference: String,
}

impl BasisMatrix {
    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    pub fn m(&self) -> usize {
        self.columns.ncols()
    }

    /// `Psi = I`: every sample is its own parameter (standard ILC).
    pub fn identity(n: usize) -> Self {
        Self {
            columns: DMatrix::identity(n, n),
            labels: (0..n).map(|k| format!("sample_{k}")).collect(),
            source_reference: "identity".into(),
        }
    }

    /// Divide each column by its largest absolute entry. Returns the scaled basis
    /// and the divisors (zero columns keep divisor 1).
    pub fn normalized_max_abs(&self) -> (Self, Vec<f64>) {
        let mut out = self.clone();
        let mut scales = Vec::with_capacity(self.m());
        for mut col in out.columns.column_iter_mut() {
            let s = col.amax();
            let s = if s > 0.0 { s } else { 1.0 };
            col /= s;
            scales.push(s);
        }
        (out, scales)
    }

    /// `f = Psi upsilon`.
    pub fn feedforward(&self, upsilon: &DVector<f64>) -> DVector<f64> {
        &self.columns * upsilon
    }
}

/// `Psi(r) = [acceleration, velocity]`.
pub fn build_basis(r: &ReferenceProfile) -> Result<BasisMatrix, TrajectoryError> {
    let acc = discrete_derivative(&r.samples, r.sample_time, 2)?;
    let vel = discrete_derivative(&r.samples, r.sample_time, 1)?;
    Ok(BasisMatrix {
        columns: DMatrix::from_columns(&[acc, vel]),
        labels: vec!["acceleration".into(), "velocity".into()],
        source_reference: format!("third_order({} segments, N={})", r.segments.len(), r.len()),
    })
}

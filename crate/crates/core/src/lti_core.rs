//! Discrete-time SISO transfer functions, their state-space realization and the
//! finite-horizon lifted closed-loop maps `S = (I+PC)^-1` and `J = SP`.
//!
//! Polynomials are stored in descending powers of `z`. Realizations use the
//! controllable canonical form:
//!
//! ```text
//! H(z) = (b0 z^n + b1 z^(n-1) + ... + bn) / (z^n + a1 z^(n-1) + ... + an)
//!
//! A = [-a1 -a2 ... -an]     B = [1 0 ... 0]^T
//!     [ 1   0  ...  0 ]     C = [b1-b0 a1, ..., bn-b0 an]
//!     [      ...      ]     D = b0
//! ```

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Closed-loop eigenvalues must satisfy `|lambda| < 1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("transfer function is improper: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("denominator is empty or has a zero leading coefficient")]
    ZeroDenominator,
    #[error("sample time must be positive and finite, got {0}")]
    BadSampleTime(f64),
    #[error("coefficient arrays contain non-finite values")]
    NonFinite,
    #[error("sample-time mismatch: plant {plant} s vs controller {controller} s")]
    SampleTimeMismatch { plant: f64, controller: f64 },
    #[error("closed loop is not internally stable: spectral radius {radius:.12} (need < 1 - {STABILITY_MARGIN:e})")]
    Unstable { radius: f64 },
    #[error("algebraic loop is singular: 1 + D_p D_c = 0")]
    SingularAlgebraicLoop,
    #[error("signal length {got} does not match horizon {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("root {root} is not a root of the {which}: residual {residual:e}")]
    NotARoot { which: &'static str, root: f64, residual: f64 },
    #[error("snapping the root {root} needs coefficient {index} to move by {needed:e}, beyond its bound {bound:e}")]
    SnapOutOfBounds { root: f64, index: usize, needed: f64, bound: f64 },
    #[error("bound list has {got} entries, denominator has {expected} coefficients")]
    BoundLength { expected: usize, got: usize },
}

/// Evaluate a descending-power polynomial with Horner's rule.
pub fn poly_eval(p: &[f64], z: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * z + c)
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (k, &y) in b.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Sum of two descending-power polynomials, aligned at the constant term.
pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    for (i, &x) in b.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    out
}

/// Synthetic division by `(z - root)`. Returns quotient and remainder.
pub fn deflate(p: &[f64], root: f64) -> (Vec<f64>, f64) {
    if p.len() <= 1 {
        return (Vec::new(), p.first().copied().unwrap_or(0.0));
    }
    let mut q = Vec::with_capacity(p.len() - 1);
    let mut acc = 0.0;
    for &c in &p[..p.len() - 1] {
        acc = acc * root + c;
        q.push(acc);
    }
    let rem = acc * root + p[p.len() - 1];
    (q, rem)
}

fn strip_leading_zeros(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len());
    p[first..].to_vec()
}

/// Rational transfer function in `z` with a monic denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    sample_time: f64,
}

impl TransferFunction {
    pub fn new(numerator: &[f64], denominator: &[f64], sample_time: f64) -> Result<Self, LtiError> {
        if !(sample_time.is_finite() && sample_time > 0.0) {
            return Err(LtiError::BadSampleTime(sample_time));
        }
        if numerator.iter().chain(denominator).any(|c| !c.is_finite()) {
            return Err(LtiError::NonFinite);
        }
        let den = strip_leading_zeros(denominator);
        if den.is_empty() {
            return Err(LtiError::ZeroDenominator);
        }
        let mut num = strip_leading_zeros(numerator);
        if num.is_empty() {
            num.push(0.0);
        }
        if num.len() > den.len() {
            return Err(LtiError::Improper { num: num.len() - 1, den: den.len() - 1 });
        }
        let lead = den[0];
        Ok(Self {
            num: num.iter().map(|c| c / lead).collect(),
            den: den.iter().map(|c| c / lead).collect(),
            sample_time,
        })
    }

    pub fn gain(k: f64, sample_time: f64) -> Result<Self, LtiError> {
        Self::new(&[k], &[1.0], sample_time)
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    /// Denominator degree, i.e. the number of states of a minimal-form realization.
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|&c| c == 0.0)
    }

    /// Numerator padded with leading zeros to the denominator's length.
    pub fn padded_numerator(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.den.len() - self.num.len()];
        b.extend_from_slice(&self.num);
        b
    }

    /// Move the denominator coefficients by the smallest bound-weighted amount that
    /// makes `root` an exact pole.
    ///
    /// Minimizes `sum (d_i / b_i)^2` subject to `den(root) + sum d_i root^(n-i) = 0`.
    /// A zero bound pins that coefficient. Fails if any `|d_i| > b_i`, so the move
    /// stays inside the precision the coefficients were given with.
    pub fn snap_denominator_root(&self, root: f64, bounds: &[f64]) -> Result<(Self, Vec<f64>), LtiError> {
        let n = self.den.len();
        if bounds.len() != n {
            return Err(LtiError::BoundLength { expected: n, got: bounds.len() });
        }
        let v: Vec<f64> = (0..n).map(|i| root.powi((n - 1 - i) as i32)).collect();
        let residual = poly_eval(&self.den, root);
        let norm: f64 = bounds.iter().zip(&v).map(|(b, vi)| b * b * vi * vi).sum();
        if norm == 0.0 {
            if residual == 0.0 {
                return Ok((self.clone(), vec![0.0; n]));
            }
            return Err(LtiError::SnapOutOfBounds { root, index: 0, needed: residual.abs(), bound: 0.0 });
        }
        let delta: Vec<f64> = bounds.iter().zip(&v).map(|(b, vi)| -residual * b * b * vi / norm).collect();
        for (i, (d, b)) in delta.iter().zip(bounds).enumerate() {
            if d.abs() > *b {
                return Err(LtiError::SnapOutOfBounds { root, index: i, needed: d.abs(), bound: *b });
            }
        }
        let den: Vec<f64> = self.den.iter().zip(&delta).map(|(a, d)| a + d).collect();
        Ok((Self::new(&self.num, &den, self.sample_time)?, delta))
    }

    /// Divide `(z - root)` out of numerator and denominator (pole-zero cancellation).
    ///
    /// Each remainder must be below `tol` times the coefficient 1-norm.
    pub fn cancel_common_root(&self, root: f64, tol: f64) -> Result<Self, LtiError> {
        let scale = |p: &[f64]| p.iter().map(|c| c.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let (qn, rn) = deflate(&self.num, root);
        if rn.abs() > tol * scale(&self.num) || self.num.len() < 2 {
            return Err(LtiError::NotARoot { which: "numerator", root, residual: rn });
        }
        let (qd, rd) = deflate(&self.den, root);
        if rd.abs() > tol * scale(&self.den) {
            return Err(LtiError::NotARoot { which: "denominator", root, residual: rd });
        }
        Self::new(&qn, &qd, self.sample_time)
    }
}

/// Single-input single-output discrete state-space model.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
    pub sample_time: f64,
}

impl StateSpaceModel {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Controllable canonical realization.
pub fn tf_to_state_space(tf: &TransferFunction) -> StateSpaceModel {
    let n = tf.order();
    let a_coef = &tf.den[1..];
    let b = tf.padded_numerator();
    let d = b[0];
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        a[(0, k)] = -a_coef[k];
        if k + 1 < n {
            a[(k + 1, k)] = 1.0;
        }
    }
    let mut bv = DVector::zeros(n);
    if n > 0 {
        bv[0] = 1.0;
    }
    let c = DVector::from_iterator(n, (0..n).map(|k| b[k + 1] - d * a_coef[k]));
    StateSpaceModel { a, b: bv, c, d, sample_time: tf.sample_time }
}

/// `h[0] = D`, `h[k] = C A^(k-1) B`.
pub fn impulse_response(model: &StateSpaceModel, horizon: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(horizon);
    if horizon == 0 {
        return h;
    }
    h.push(model.d);
    let mut x = model.b.clone();
    for _ in 1..horizon {
        h.push(model.c.dot(&x));
        x = &model.a * x;
    }
    h
}

/// Lower-triangular Toeplitz matrix with first column `h`.
pub fn lifted_toeplitz(h: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    DMatrix::from_fn(n, n, |i, k| if i >= k { h[i - k] } else { 0.0 })
}

/// Lower-triangular Toeplitz product `T(h) x`, without forming the matrix.
pub fn toeplitz_apply(h: &[f64], x: &[f64]) -> Vec<f64> {
    let n = h.len().min(x.len());
    (0..n).map(|i| (0..=i).map(|k| h[i - k] * x[k]).sum()).collect()
}

/// Closed loop of Fig. 1 style: `e = r - y`, `u = C e + f`, `y = P u`.
///
/// State is `[x_p; x_c]`; inputs are `(r, f)` and the output is `e`.
#[derive(Debug, Clone)]
pub struct ClosedLoopModel {
    pub a: DMatrix<f64>,
    pub b_r: DVector<f64>,
    pub b_f: DVector<f64>,
    pub c_e: DVector<f64>,
    pub d_er: f64,
    pub d_ef: f64,
    pub sample_time: f64,
}

impl ClosedLoopModel {
    pub fn new(p: &TransferFunction, c: &TransferFunction) -> Result<Self, LtiError> {
        if (p.sample_time - c.sample_time).abs() > 1e-12 * p.sample_time.max(c.sample_time) {
            return Err(LtiError::SampleTimeMismatch { plant: p.sample_time, controller: c.sample_time });
        }
        let sp = tf_to_state_space(p);
        let sc = tf_to_state_space(c);
        let (np, nc) = (sp.order(), sc.order());
        let denom = 1.0 + sp.d * sc.d;
        if denom == 0.0 {
            return Err(LtiError::SingularAlgebraicLoop);
        }
        let k = 1.0 / denom;
        // e = k (r - Cp xp - Dp Cc xc - Dp f);  u = Cc xc + Dc e + f
        let n = np + nc;
        let mut ce = DVector::zeros(n);
        for i in 0..np {
            ce[i] = -k * sp.c[i];
        }
        for i in 0..nc {
            ce[np + i] = -k * sp.d * sc.c[i];
        }
        let (d_er, d_ef) = (k, -k * sp.d);
        let mut cu = DVector::zeros(n);
        for i in 0..nc {
            cu[np + i] = sc.c[i];
        }
        cu += &ce * sc.d;
        let d_ur = sc.d * d_er;
        let d_uf = sc.d * d_ef + 1.0;

        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (np, np)).copy_from(&sp.a);
        a.view_mut((np, np), (nc, nc)).copy_from(&sc.a);
        for i in 0..np {
            for j in 0..n {
                a[(i, j)] += sp.b[i] * cu[j];
            }
        }
        for i in 0..nc {
            for j in 0..n {
                a[(np + i, j)] += sc.b[i] * ce[j];
            }
        }
        let mut b_r = DVector::zeros(n);
        let mut b_f = DVector::zeros(n);
        for i in 0..np {
            b_r[i] = sp.b[i] * d_ur;
            b_f[i] = sp.b[i] * d_uf;
        }
        for i in 0..nc {
            b_r[np + i] = sc.b[i] * d_er;
            b_f[np + i] = sc.b[i] * d_ef;
        }
        Ok(Self { a, b_r, b_f, c_e: ce, d_er, d_ef, sample_time: p.sample_time })
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0 - STABILITY_MARGIN
    }

    fn channel(&self, b: &DVector<f64>, d: f64) -> StateSpaceModel {
        StateSpaceModel { a: self.a.clone(), b: b.clone(), c: self.c_e.clone(), d, sample_time: self.sample_time }
    }

    /// Realization of `S`, the map from `r` to `e`.
    pub fn sensitivity(&self) -> StateSpaceModel {
        self.channel(&self.b_r, self.d_er)
    }

    /// Realization of `J = SP`. The map from `f` to `e` is `-J`.
    pub fn process_sensitivity(&self) -> StateSpaceModel {
        self.channel(&(-&self.b_f), -self.d_ef)
    }
}

/// Finite-horizon lifted closed loop.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    pub s: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub horizon: usize,
    pub sample_time: f64,
    /// Spectral radius of the closed-loop state matrix.
    pub spectral_radius: f64,
}

impl LiftedSystem {
    /// First column of `S` (its impulse response).
    pub fn s_impulse(&self) -> Vec<f64> {
        self.s.column(0).iter().copied().collect()
    }

    pub fn j_impulse(&self) -> Vec<f64> {
        self.j.column(0).iter().copied().collect()
    }

    /// Number of leading zero Markov parameters of `J` (input-output delay).
    pub fn j_delay(&self) -> usize {
        self.j.column(0).iter().take_while(|&&h| h == 0.0).count()
    }
}

pub fn closed_loop_maps(p: &TransferFunction, c: &TransferFunction, horizon: usize) -> Result<LiftedSystem, LtiError> {
    if horizon == 0 {
        return Err(LtiError::EmptyHorizon);
    }
    let cl = ClosedLoopModel::new(p, c)?;
    let radius = cl.spectral_radius();
    if !(radius < 1.0 - STABILITY_MARGIN) {
        return Err(LtiError::Unstable { radius });
    }
    let hs = impulse_response(&cl.sensitivity(), horizon);
    let hj = impulse_response(&cl.process_sensitivity(), horizon);
    Ok(LiftedSystem {
        s: lifted_toeplitz(&hs),
        j: lifted_toeplitz(&hj),
        horizon,
        sample_time: p.sample_time,
        spectral_radius: radius,
    })
}

/// First column of `S` obtained the matrix way: inverting the lifted `I + PC`
/// (lower-triangular Toeplitz, so its inverse is Toeplitz and one forward
/// substitution suffices).
pub fn sensitivity_by_inversion(p: &TransferFunction, c: &TransferFunction, horizon: usize) -> Vec<f64> {
    let hp = impulse_response(&tf_to_state_space(p), horizon);
    let hc = impulse_response(&tf_to_state_space(c), horizon);
    let mut t = toeplitz_apply(&hp, &hc);
    if let Some(t0) = t.first_mut() {
        *t0 += 1.0;
    }
    let mut s = vec![0.0; horizon];
    for i in 0..horizon {
        let acc: f64 = (0..i).map(|k| t[i - k] * s[k]).sum();
        s[i] = (if i == 0 { 1.0 } else { 0.0 } - acc) / t[0];
    }
    s
}

fn check_len(expected: usize, got: usize) -> Result<(), LtiError> {
    if expected != got {
        return Err(LtiError::LengthMismatch { expected, got });
    }
    Ok(())
}

/// `e = S r - J f`.
pub fn simulate_trial(sys: &LiftedSystem, r: &DVector<f64>, f: &DVector<f64>) -> Result<DVector<f64>, LtiError> {
    check_len(sys.horizon, r.len())?;
    check_len(sys.horizon, f.len())?;
    Ok(&sys.s * r - &sys.j * f)
}

/// Direct-form difference equation of a transfer function, one sample at a time.
#[derive(Debug, Clone)]
pub struct DifferenceEquation {
    b: Vec<f64>,
    a: Vec<f64>,
    u_hist: Vec<f64>,
    y_hist: Vec<f64>,
}

impl DifferenceEquation {
    pub fn new(tf: &TransferFunction) -> Self {
        let n = tf.order();
        Self { b: tf.padded_numerator(), a: tf.den.clone(), u_hist: vec![0.0; n], y_hist: vec![0.0; n] }
    }

    pub fn feedthrough(&self) -> f64 {
        self.b[0]
    }

    /// Output contribution of past samples.
    pub fn past(&self) -> f64 {
        (1..self.a.len()).map(|i| self.b[i] * self.u_hist[i - 1] - self.a[i] * self.y_hist[i - 1]).sum()
    }

    pub fn push(&mut self, u: f64, y: f64) {
        if !self.u_hist.is_empty() {
            self.u_hist.rotate_right(1);
            self.y_hist.rotate_right(1);
            self.u_hist[0] = u;
            self.y_hist[0] = y;
        }
    }
}

/// Sample-by-sample simulation of the feedback loop with feedforward `f` at the
/// plant input. Returns the error `e = r - y`.
pub fn simulate_recursive(p: &TransferFunction, c: &TransferFunction, r: &[f64], f: &[f64]) -> Result<Vec<f64>, LtiError> {
    check_len(r.len(), f.len())?;
    let mut pe = DifferenceEquation::new(p);
    let mut ce = DifferenceEquation::new(c);
    let (dp, dc) = (pe.feedthrough(), ce.feedthrough());
    let denom = 1.0 + dp * dc;
    if denom == 0.0 {
        return Err(LtiError::SingularAlgebraicLoop);
    }
    let mut e_out = Vec::with_capacity(r.len());
    for k in 0..r.len() {
        let (yp, uc) = (pe.past(), ce.past());
        let e = (r[k] - yp - dp * uc - dp * f[k]) / denom;
        let u = uc + dc * e + f[k];
        let y = yp + dp * u;
        ce.push(e, u - f[k]);
        pe.push(u, y);
        e_out.push(e);
    }
    Ok(e_out)
}

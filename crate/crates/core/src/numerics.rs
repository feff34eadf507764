//! Quadratic forms, the trial cost, spectral norm and seeded Gaussian sampling.
//!
//! Every cost term is the plain quadratic form `x^T W x`; there is no extra
//! squaring of a "weighted norm".

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0} must be positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("{0} must be positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("{0} must be symmetric")]
    NotSymmetric(&'static str),
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("variance must be nonnegative, got {0}")]
    NegativeVariance(f64),
}

/// Weight matrix stored either as `s * I` or densely.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Scalar(f64),
    Full(DMatrix<f64>),
}

impl Weight {
    pub fn quad(&self, x: &DVector<f64>) -> Result<f64, NumericsError> {
        match self {
            Weight::Scalar(s) => Ok(s * x.norm_squared()),
            Weight::Full(w) => {
                if w.nrows() != x.len() || w.ncols() != x.len() {
                    return Err(NumericsError::Dimension { expected: w.nrows(), got: x.len() });
                }
                Ok(x.dot(&(w * x)))
            }
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Weight::Scalar(s) => x * *s,
            Weight::Full(w) => w * x,
        }
    }

    /// `W M` for a matrix right-hand side.
    pub fn apply_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Weight::Scalar(s) => m * *s,
            Weight::Full(w) => w * m,
        }
    }

    pub fn to_matrix(&self, n: usize) -> DMatrix<f64> {
        match self {
            Weight::Scalar(s) => DMatrix::identity(n, n) * *s,
            Weight::Full(w) => w.clone(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Weight::Scalar(_) => None,
            Weight::Full(w) => Some(w.nrows()),
        }
    }

    fn min_eigenvalue(&self, name: &'static str) -> Result<f64, NumericsError> {
        match self {
            Weight::Scalar(s) if s.is_finite() => Ok(*s),
            Weight::Scalar(_) => Err(NumericsError::NonFinite),
            Weight::Full(w) => {
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(NumericsError::NonFinite);
                }
                if w.nrows() != w.ncols() {
                    return Err(NumericsError::Dimension { expected: w.nrows(), got: w.ncols() });
                }
                let tol = 1e-12 * w.amax().max(1.0);
                if (w - w.transpose()).amax() > tol {
                    return Err(NumericsError::NotSymmetric(name));
                }
                if w.nrows() == 0 {
                    return Ok(0.0);
                }
                Ok(w.clone().symmetric_eigenvalues().min())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Weight::Scalar(s) => *s == 0.0,
            Weight::Full(w) => w.iter().all(|&v| v == 0.0),
        }
    }
}

/// `W_e` (on the error), `W_u` (on the parameters) and `W_du` (on the parameter change).
#[derive(Debug, Clone, PartialEq)]
pub struct Weighting {
    pub w_e: Weight,
    pub w_u: Weight,
    pub w_du: Weight,
}

impl Weighting {
    pub fn new(w_e: Weight, w_u: Weight, w_du: Weight) -> Result<Self, NumericsError> {
        if w_e.min_eigenvalue("W_e")? <= 0.0 {
            return Err(NumericsError::NotPositiveDefinite("W_e"));
        }
        let tol = |w: &Weight| -1e-12 * match w {
            Weight::Scalar(s) => s.abs(),
            Weight::Full(m) => m.amax(),
        };
        if w_u.min_eigenvalue("W_upsilon")? < tol(&w_u) {
            return Err(NumericsError::NotPositiveSemidefinite("W_upsilon"));
        }
        if w_du.min_eigenvalue("W_delta_upsilon")? < tol(&w_du) {
            return Err(NumericsError::NotPositiveSemidefinite("W_delta_upsilon"));
        }
        Ok(Self { w_e, w_u, w_du })
    }

    /// `W_e = 1e6 I`, `W_u = 1e-6 I`, `W_du = 0`.
    pub fn standard() -> Self {
        Self { w_e: Weight::Scalar(1e6), w_u: Weight::Scalar(1e-6), w_du: Weight::Scalar(0.0) }
    }
}

/// `x^T W x`.
pub fn weighted_quadratic(x: &DVector<f64>, w: &Weight) -> Result<f64, NumericsError> {
    w.quad(x)
}

/// `e_j^T W_e e_j + u_next^T W_u u_next + (u_next - u_j)^T W_du (u_next - u_j)`.
pub fn trial_cost(e_j: &DVector<f64>, u_j: &DVector<f64>, u_next: &DVector<f64>, w: &Weighting) -> Result<f64, NumericsError> {
    if u_j.len() != u_next.len() {
        return Err(NumericsError::Dimension { expected: u_j.len(), got: u_next.len() });
    }
    let du = u_next - u_j;
    Ok(w.w_e.quad(e_j)? + w.w_u.quad(u_next)? + w.w_du.quad(&du)?)
}

/// Largest singular value (SVD).
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64, NumericsError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.clone().singular_values().max())
}

/// Name of the generator and Gaussian transform, recorded in run metadata.
pub const SAMPLER_ALGORITHM: &str = "ChaCha20Rng(seed_from_u64) + rand_distr::StandardNormal(ziggurat)";

/// Deterministic standard-normal stream.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    seed: u64,
    rng: ChaCha20Rng,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_id(&self) -> &'static str {
        SAMPLER_ALGORITHM
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// `mean + sigma z`, `z ~ N(0, I)`. Zero variance returns the mean without
/// consuming randomness.
pub fn gaussian_vector(sampler: &mut SeededSampler, mean: &DVector<f64>, variance: f64) -> Result<DVector<f64>, NumericsError> {
    if !(variance >= 0.0) {
        return Err(NumericsError::NegativeVariance(variance));
    }
    if variance == 0.0 {
        return Ok(mean.clone());
    }
    let sigma = variance.sqrt();
    Ok(DVector::from_iterator(mean.len(), mean.iter().map(|m| m + sigma * sampler.standard_normal())))
}

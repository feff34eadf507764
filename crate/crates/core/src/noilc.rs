//! Norm-optimal ILC with basis functions.
//!
//! Minimizing, over the next parameter vector `u'`,
//!
//! ```text
//! e'^T W_e e' + u'^T W_u u' + (u' - u)^T W_du (u' - u),   e' = e - J Psi (u' - u)
//! ```
//!
//! gives `u' = Q u + L e` with `H = (J Psi)^T W_e (J Psi)`, `M = H + W_u + W_du`,
//! `Q = M^-1 (H + W_du)` and `L = M^-1 (J Psi)^T W_e`. `W_u` and `W_du` act on
//! the `m` parameters directly.

use crate::numerics::{spectral_norm, NumericsError, Weight, Weighting};
use nalgebra::{Cholesky, DMatrix, DVector};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Relative singular-value threshold of the basis rank check.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NoilcError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("J Psi has rank {rank} < m = {m} and W_upsilon + W_delta_upsilon = 0; set W_upsilon positive definite")]
    RankDeficient { rank: usize, m: usize },
    #[error("Psi^T (J^T W_e J) Psi + W_upsilon + W_delta_upsilon is not positive definite; set W_upsilon positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Robustness matrix `Q` (m x m), learning matrix `L` (m x N) and `sigma_max(Q - L J Psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoilcGains {
    pub q: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub convergence_margin: f64,
}

fn param_weight(w: &Weight, m: usize, what: &'static str) -> Result<DMatrix<f64>, NoilcError> {
    if let Some(d) = w.dim() {
        if d != m {
            return Err(NoilcError::Dimension { what, expected: m, got: d });
        }
    }
    Ok(w.to_matrix(m))
}

pub fn synthesize_gains(j: &DMatrix<f64>, psi: &DMatrix<f64>, w: &Weighting) -> Result<NoilcGains, NoilcError> {
    synthesize_from_jpsi(&(j * psi), w)
}

/// Same as [`synthesize_gains`] with `J Psi` already formed.
pub fn synthesize_from_jpsi(jpsi: &DMatrix<f64>, w: &Weighting) -> Result<NoilcGains, NoilcError> {
    let (n, m) = jpsi.shape();
    if let Some(d) = w.w_e.dim() {
        if d != n {
            return Err(NoilcError::Dimension { what: "W_e", expected: n, got: d });
        }
    }
    let wu = param_weight(&w.w_u, m, "W_upsilon")?;
    let wdu = param_weight(&w.w_du, m, "W_delta_upsilon")?;

    if w.w_u.is_zero() && w.w_du.is_zero() {
        let sv = jpsi.clone().singular_values();
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
        if rank < m {
            return Err(NoilcError::RankDeficient { rank, m });
        }
    }

    let we_jpsi = w.w_e.apply_mat(jpsi);
    let h = jpsi.transpose() * &we_jpsi;
    let mut inner = &h + &wu + &wdu;
    inner = (&inner + inner.transpose()) * 0.5;
    let chol = Cholesky::new(inner).ok_or(NoilcError::NotPositiveDefinite)?;
    let q = chol.solve(&(&h + &wdu));
    let l = chol.solve(&we_jpsi.transpose());
    let convergence_margin = spectral_norm(&(&q - &l * jpsi))?;
    Ok(NoilcGains { q, l, convergence_margin })
}

/// `u_{j+1} = Q u_j + L e_j`.
pub fn noilc_update(g: &NoilcGains, u: &DVector<f64>, e: &DVector<f64>) -> Result<DVector<f64>, NoilcError> {
    if u.len() != g.q.ncols() {
        return Err(NoilcError::Dimension { what: "upsilon", expected: g.q.ncols(), got: u.len() });
    }
    if e.len() != g.l.ncols() {
        return Err(NoilcError::Dimension { what: "error", expected: g.l.ncols(), got: e.len() });
    }
    Ok(&g.q * u + &g.l * e)
}

/// `sigma_max(Q - L J Psi)`. Below 1 means monotone decrease of `||e_j||_2`.
pub fn convergence_margin(g: &NoilcGains, j: &DMatrix<f64>, psi: &DMatrix<f64>) -> Result<f64, NoilcError> {
    Ok(spectral_norm(&(&g.q - &g.l * (j * psi)))?)
}

/// Fixed point of the update for the trial map `e(u) = sr - jpsi u`:
/// solves `(I - Q + L J Psi) u = L sr`.
pub fn fixed_point(g: &NoilcGains, sr: &DVector<f64>, jpsi: &DMatrix<f64>) -> Option<DVector<f64>> {
    let m = g.q.nrows();
    let a = DMatrix::identity(m, m) - &g.q + &g.l * jpsi;
    a.lu().solve(&(&g.l * sr))
}

impl NoilcGains {
    /// Long-format CSV `matrix,row,col,value`: `Q` first, then `L` row-major.
    pub fn write_csv(&self, path: &Path) -> Result<(), NoilcError> {
        let io = |source| NoilcError::Io { path: path.display().to_string(), source };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "matrix,row,col,value").map_err(io)?;
        for (name, mat) in [("Q", &self.q), ("L", &self.l)] {
            for r in 0..mat.nrows() {
                for c in 0..mat.ncols() {
                    writeln!(out, "{name},{r},{c},{}", mat[(r, c)]).map_err(io)?;
                }
            }
        }
        out.flush().map_err(io)
    }
}

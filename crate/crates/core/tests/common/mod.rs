#![allow(dead_code)]
//! Independent oracles shared by the integration tests. Nothing here calls the
//! library routine it is used to check.

use ilc_core::harness::{build_transfer_function, preset};
use ilc_core::lti_core::TransferFunction;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Repaired plant and controller of the `paper_sec5` preset.
pub fn sec5_loop() -> (TransferFunction, TransferFunction) {
    let cfg = preset("paper_sec5").unwrap().config;
    let (p, _) = build_transfer_function("plant", &cfg.plant).unwrap();
    let (c, _) = build_transfer_function("controller", &cfg.controller).unwrap();
    (p, c)
}

/// First `n` Markov parameters by long division of `num / den` (descending powers).
pub fn long_division(num: &[f64], den: &[f64], n: usize) -> Vec<f64> {
    let d = den.len() - 1;
    let mut rem: Vec<f64> = vec![0.0; den.len() - num.len()];
    rem.extend_from_slice(num);
    rem.resize(den.len() + n, 0.0);
    let mut h = Vec::with_capacity(n);
    for k in 0..n {
        let q = rem[k] / den[0];
        h.push(q);
        for i in 0..=d {
            if k + i < rem.len() {
                rem[k + i] -= q * den[i];
            }
        }
    }
    h
}

/// `y[k] = (sum_i b_i u[k-i] - sum_{i>=1} a_i y[k-i]) / a_0` over full histories,
/// with `num` padded to `den`'s length.
pub fn filter(num: &[f64], den: &[f64], u: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; den.len() - num.len()];
    b.extend_from_slice(num);
    let mut y = vec![0.0; u.len()];
    for k in 0..u.len() {
        let mut acc = 0.0;
        for (i, bi) in b.iter().enumerate() {
            if k >= i {
                acc += bi * u[k - i];
            }
        }
        for (i, ai) in den.iter().enumerate().skip(1) {
            if k >= i {
                acc -= ai * y[k - i];
            }
        }
        y[k] = acc / den[0];
    }
    y
}

/// Closed-loop error by per-sample simulation of the plant and controller as
/// two separate difference equations over full signal histories, with the
/// algebraic loop through both feedthroughs solved at each sample.
pub fn closed_loop_error(p: &TransferFunction, c: &TransferFunction, r: &[f64], f: &[f64]) -> Vec<f64> {
    let pad = |tf: &TransferFunction| {
        let mut b = vec![0.0; tf.denominator().len() - tf.numerator().len()];
        b.extend_from_slice(tf.numerator());
        b
    };
    let (pb, pa, cb, ca) = (pad(p), p.denominator().to_vec(), pad(c), c.denominator().to_vec());
    let n = r.len();
    let (mut y, mut u, mut e, mut v) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let past = |b: &[f64], a: &[f64], x: &[f64], out: &[f64], k: usize| -> f64 {
        let mut s = 0.0;
        for i in 1..a.len() {
            if k >= i {
                s += b[i] * x[k - i] - a[i] * out[k - i];
            }
        }
        s
    };
    for k in 0..n {
        // v = C e (controller output), u = v + f, y = P u, e = r - y
        let vp = past(&cb, &ca, &e, &v, k);
        let yp = past(&pb, &pa, &u, &y, k);
        let ek = (r[k] - yp - pb[0] * (vp + f[k])) / (1.0 + pb[0] * cb[0]);
        e[k] = ek;
        v[k] = vp + cb[0] * ek;
        u[k] = v[k] + f[k];
        y[k] = yp + pb[0] * u[k];
    }
    e
}

/// Process sensitivity `SP` driven by `f`, per sample.
pub fn process_sensitivity_response(p: &TransferFunction, c: &TransferFunction, f: &[f64]) -> Vec<f64> {
    closed_loop_error(p, c, &vec![0.0; f.len()], f).iter().map(|e| -e).collect()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| m[i][col].abs().partial_cmp(&m[k][col].abs()).unwrap()).unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Minimizer of
/// `(e - G(u' - u))^T We (e - G(u' - u)) + u'^T Wu u' + (u' - u)^T Wdu (u' - u)`
/// for diagonal weights, from the normal equations of the stacked least-squares
/// problem `[sqrt(We) G; sqrt(Wu); sqrt(Wdu)] u' ~ [sqrt(We)(e + G u); 0; sqrt(Wdu) u]`.
pub fn brute_force_next(g: &DMatrix<f64>, e: &[f64], u: &[f64], we: &[f64], wu: &[f64], wdu: &[f64]) -> Vec<f64> {
    let (n, m) = g.shape();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for i in 0..n {
        let s = we[i].sqrt();
        rows.push((0..m).map(|k| s * g[(i, k)]).collect());
        let gu: f64 = (0..m).map(|k| g[(i, k)] * u[k]).sum();
        rhs.push(s * (e[i] + gu));
    }
    for i in 0..m {
        let mut r = vec![0.0; m];
        r[i] = wu[i].sqrt();
        rows.push(r);
        rhs.push(0.0);
        let mut r = vec![0.0; m];
        r[i] = wdu[i].sqrt();
        rows.push(r);
        rhs.push(wdu[i].sqrt() * u[i]);
    }
    let ata: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| rows.iter().map(|r| r[a] * r[b]).sum()).collect())
        .collect();
    let atb: Vec<f64> = (0..m).map(|a| rows.iter().zip(&rhs).map(|(r, y)| r[a] * y).sum()).collect();
    gauss_solve(&ata, &atb)
}

/// Random stable causal impulse response: `h[k] = c_k rho^k`.
pub fn random_stable_impulse(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let rho: f64 = r.random_range(0.3..0.8);
    (0..n)
        .map(|k| {
            let c: f64 = if k == 0 { r.random_range(1.0..2.0) } else { r.random_range(-1.0..1.0) };
            c * rho.powi(k as i32)
        })
        .collect()
}

pub fn toeplitz(h: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..=i {
            t[(i, k)] = h[i - k];
        }
    }
    t
}

pub fn random_matrix(r: &mut impl Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| r.random_range(-1.0..1.0))
}

pub fn random_vector(r: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0))
}

/// Largest singular value by power iteration on `M^T M`.
pub fn power_iteration_norm(m: &DMatrix<f64>, iters: usize) -> f64 {
    let mtm = m.transpose() * m;
    let mut v = DVector::from_element(m.ncols(), 1.0);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = &mtm * &v;
        lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = w / lambda;
    }
    lambda.sqrt()
}

/// Sum over components of `log N(u_b; mu_b, sigma2)`.
pub fn log_density(u: &DVector<f64>, mu: &DVector<f64>, sigma2: f64) -> f64 {
    u.iter()
        .zip(mu.iter())
        .map(|(a, b)| -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln() - (a - b).powi(2) / (2.0 * sigma2))
        .sum()
}

/// Mass-damper `1 / (m s^2 + d s)` under a first-order (triangle) hold:
/// `((z - 1)^2 / (Ts z)) Z{G(s) / s^2}`, with
/// `1 / (s^3 (s + a)) = 1/(a s^3) - 1/(a^2 s^2) + 1/(a^3 s) - 1/(a^3 (s + a))`.
pub fn foh_mass_damper(mass: f64, damping: f64, ts: f64) -> TransferFunction {
    let alpha = damping / mass;
    let p = (-alpha * ts).exp();
    let one_minus_p = -(-alpha * ts).exp_m1();
    let (a, b, c) = (1.0 / alpha, -1.0 / alpha.powi(2), 1.0 / alpha.powi(3));
    // (z + 1)(z - p), (z - 1)(z - p), (z - 1)^2
    let t1 = [1.0, 1.0 - p, -p];
    let t2 = [1.0, -(1.0 + p), p];
    let t3 = [1.0, -2.0, 1.0];
    let num: Vec<f64> = (0..3)
        .map(|i| (a * ts * ts / 2.0 * t1[i] + b * ts * t2[i] + c * one_minus_p * t3[i]) / (mass * ts))
        .collect();
    TransferFunction::new(&num, &[1.0, -(1.0 + p), p], ts).unwrap()
}

/// Plant whose inverse is exactly `mass D2 + damping D1` for the central
/// difference operators (one sample of delay).
pub fn central_difference_mass_damper(mass: f64, damping: f64, ts: f64) -> TransferFunction {
    let a = mass / (ts * ts) + damping / (2.0 * ts);
    let b = 2.0 * mass / (ts * ts);
    let c = mass / (ts * ts) - damping / (2.0 * ts);
    TransferFunction::new(&[1.0, 0.0], &[a, -b, c], ts).unwrap()
}

/// Least-squares slope of `y` against its index.
pub fn slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - mx) * (v - my)).sum();
    let den: f64 = (0..y.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    num / den
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

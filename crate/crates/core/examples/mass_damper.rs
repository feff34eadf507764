//! Feedforward parameters as physical constants: on a mass-damper plant the
//! NOILC fixed point with the raw `[acc, vel]` basis recovers mass and damping.
//!
//! `cargo run --release --example mass_damper -- [mass] [damping]`

use ilc_core::lti_core::{closed_loop_maps, TransferFunction};
use ilc_core::noilc::{fixed_point, synthesize_from_jpsi};
use ilc_core::numerics::Weighting;
use ilc_core::trajectory::{build_basis, third_order_reference, Segment};

/// `1 / (m s^2 + d s)` under a first-order (triangle) hold.
fn plant(mass: f64, damping: f64, ts: f64) -> Result<TransferFunction, Box<dyn std::error::Error>> {
    let a = damping / mass;
    let p = (-a * ts).exp();
    let q = -(-a * ts).exp_m1();
    let t1 = [1.0, 1.0 - p, -p];
    let t2 = [1.0, -(1.0 + p), p];
    let t3 = [1.0, -2.0, 1.0];
    let num: Vec<f64> = (0..3)
        .map(|i| (ts * ts / (2.0 * a) * t1[i] - ts / (a * a) * t2[i] + q / a.powi(3) * t3[i]) / (mass * ts))
        .collect();
    Ok(TransferFunction::new(&num, &[1.0, -(1.0 + p), p], ts)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mass: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.5);
    let damping: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4.0);
    let ts = 0.001;
    let n = 1000;

    let p = plant(mass, damping, ts)?;
    // PD controller kp + kd (1 - z^-1) / Ts
    let c = TransferFunction::new(&[2.2e5, -2e5], &[1.0, 0.0], ts)?;
    let sys = closed_loop_maps(&p, &c, n)?;
    let r = third_order_reference(&[Segment::new(0.1, 0.7, 8.0, 400.0, 0.3)], ts, n)?;
    let psi = build_basis(&r)?.columns;
    let jpsi = &sys.j * &psi;
    let gains = synthesize_from_jpsi(&jpsi, &Weighting::standard())?;
    let u = fixed_point(&gains, &(&sys.s * &r.samples), &jpsi).ok_or("singular fixed-point system")?;
    println!("true     m = {mass:.5}, d = {damping:.5}");
    println!("learned  m = {:.5}, d = {:.5}", u[0], u[1]);
    println!("residual ||e|| = {:.3e}", (&sys.s * &r.samples - &jpsi * &u).norm());
    Ok(())
}

//! NOILC gains, convergence margin and iteration on the printer preset.
//!
//! `cargo run --release --example noilc_gains`

use ilc_core::harness::{gains_for, preset, run_noilc};
use ilc_core::noilc::fixed_point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = preset("paper_sec5")?.config;
    let (prep, gains) = gains_for(&cfg)?;
    println!("Q =\n{}", gains.q);
    println!("L is {}x{}, max |L| = {:.3e}", gains.l.nrows(), gains.l.ncols(), gains.l.amax());
    println!("convergence margin sigma_max(Q - L J Psi) = {:.3e}", gains.convergence_margin);

    let u = fixed_point(&gains, &prep.model.sr, &prep.model.jpsi).ok_or("singular fixed-point system")?;
    let physical: Vec<f64> = u.iter().zip(&prep.basis_scales).map(|(v, s)| v / s).collect();
    println!("fixed point (normalized basis) {:?}", u.as_slice());
    println!("fixed point (per unit acc, per unit vel) {physical:?}");

    let log = run_noilc(&prep.model, &gains, &prep.weights, 10)?;
    for row in &log.rows {
        println!("trial {:>2}: cost {:.6e}, ||e|| {:.4e}, upsilon {:?}", row.j, row.cost, row.e_norm2, row.upsilon);
    }
    Ok(())
}

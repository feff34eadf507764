//! Jerk-limited reference and its derivative basis `Psi(r) = [acc, vel]`.
//!
//! `cargo run --example reference_basis -- [out_dir]` writes `r.csv` and `psi.csv`.

use ilc_core::trajectory::{build_basis, default_segments, discrete_derivative, plan_move, third_order_reference, Segment};
use std::io::Write;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/examples/reference".into()));
    std::fs::create_dir_all(&out)?;

    let plan = plan_move(0.1, 0.7, 8.0, 400.0);
    println!("one move: {:.4} s, peak velocity {:.4}, peak acceleration {:.4}", plan.duration(), plan.peak_velocity, plan.peak_acceleration);

    let ts = 0.001;
    let r = third_order_reference(&default_segments(), ts, 2000)?;
    let vel = discrete_derivative(&r.samples, ts, 1)?;
    let acc = discrete_derivative(&r.samples, ts, 2)?;
    println!("samples {}, final position {:.6}, max |vel| {:.4}, max |acc| {:.4}", r.len(), r.samples[r.len() - 1], vel.amax(), acc.amax());

    let psi = build_basis(&r)?;
    let (scaled, scales) = psi.normalized_max_abs();
    println!("basis columns {:?}, max-abs divisors {:?}", psi.labels, scales);
    println!("singular values {:?}", scaled.columns.clone().singular_values().as_slice());

    let back = third_order_reference(&[Segment::new(0.1, 0.7, 8.0, 400.0, 0.1), Segment::new(-0.1, 0.7, 8.0, 400.0, 0.1)], ts, 2000)?;
    println!("there-and-back reference ends at {:.2e}", back.samples[1999]);

    r.write_csv(&out.join("r.csv"))?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(out.join("psi.csv"))?);
    writeln!(w, "acceleration,velocity")?;
    for k in 0..psi.n() {
        writeln!(w, "{},{}", psi.columns[(k, 0)], psi.columns[(k, 1)])?;
    }
    println!("wrote {}", out.display());
    Ok(())
}

//! Run NOILC with two parameter weights, write both logs and compare them.
//!
//! `cargo run --release --example compare_logs -- [out_dir]`

use ilc_core::harness::config::WeightSpec;
use ilc_core::harness::{compare_runs, preset, read_log, run_experiment, Method, MethodKind};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/examples/compare".into()));
    let mut paths = Vec::new();
    for (name, wu) in [("w_upsilon_1e-6", 1e-6), ("w_upsilon_1e2", 1e2)] {
        let mut loaded = preset("paper_sec5")?;
        loaded.config.method = Method::Noilc;
        loaded.config.weights.w_upsilon = WeightSpec::Scalar(wu);
        let dir = out.join(name);
        run_experiment(&loaded)?.write(&dir)?;
        paths.push(dir.join("noilc").join("log.csv"));
    }
    let a = read_log(&paths[0], MethodKind::Noilc)?;
    let b = read_log(&paths[1], MethodKind::Noilc)?;
    let c = compare_runs(&a, &b)?;
    println!("final cost {:.4} vs {:.4} (ratio {:.4})", c.a.final_cost, c.b.final_cost, c.final_cost_ratio);
    println!("settled at trial {} vs {}", c.a.convergence_trial, c.b.convergence_trial);
    println!("upsilon delta {:?}", c.upsilon_delta);
    println!("max |f_b - f_a| = {:?}", c.feedforward_max_abs_diff);

    let same = compare_runs(&a, &a)?;
    println!("self comparison: ratio {}, delta {:?}", same.final_cost_ratio, same.upsilon_delta);
    Ok(())
}

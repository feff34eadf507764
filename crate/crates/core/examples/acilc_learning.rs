//! Actor-critic ILC: one seed on the printer preset, trial by trial.
//!
//! `cargo run --release --example acilc_learning -- [seed] [trials]`

use ilc_core::harness::{prepare, preset, run_acilc_seed};
use ilc_core::noilc::{fixed_point, synthesize_from_jpsi};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);

    let cfg = preset("paper_sec5")?.config;
    let prep = prepare(&cfg)?;
    let gains = synthesize_from_jpsi(&prep.model.jpsi, &prep.weights)?;
    let target = fixed_point(&gains, &prep.model.sr, &prep.model.jpsi).ok_or("singular fixed-point system")?;

    let log = run_acilc_seed(&prep, &cfg, None, seed, trials)?;
    for row in log.rows.iter().filter(|r| r.j % 10 == 0 || r.j + 1 == trials) {
        println!(
            "trial {:>3}: cost {:>10.4}, sigma^2 {:.2e}, delta {:>9.3e}, upsilon [{:.4}, {:.4}]",
            row.j, row.cost, row.sigma2, row.delta, row.upsilon[0], row.upsilon[1]
        );
    }
    println!("model-based fixed point: [{:.4}, {:.4}]", target[0], target[1]);
    Ok(())
}

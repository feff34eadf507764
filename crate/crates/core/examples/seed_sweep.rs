//! Full experiment from the preset: NOILC plus the learner over all seeds,
//! logs and metadata written to disk.
//!
//! `cargo run --release --example seed_sweep -- [out_dir] [trials]`

use ilc_core::harness::{preset, run_experiment, MethodKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "out/examples/seed_sweep".into());
    let mut loaded = preset("paper_sec5")?;
    if let Some(t) = args.next() {
        loaded.config.num_trials = t.parse()?;
    }
    let result = run_experiment(&loaded)?;
    result.write(std::path::Path::new(&out))?;

    let mut learner_costs = Vec::new();
    for (s, err) in result.summaries() {
        match (s.method, err) {
            (_, Some(e)) => println!("{} seed {:?}: {e}", s.method, s.seed),
            (MethodKind::Noilc, None) => println!("noilc: final cost {:.4}, upsilon {:?}", s.final_cost, s.final_upsilon),
            (MethodKind::Acilc, None) => {
                println!("acilc seed {:>2}: final cost {:.4}, upsilon {:?}", s.seed.unwrap_or(0), s.final_cost, s.final_upsilon);
                learner_costs.push(s.final_cost);
            }
        }
    }
    learner_costs.sort_by(|a, b| a.total_cmp(b));
    if !learner_costs.is_empty() {
        println!("median learner cost {:.4}", learner_costs[learner_costs.len() / 2]);
    }
    println!("wrote {out}");
    Ok(())
}

//! Configuration handling: defaults, validation messages and the preset text.
//!
//! `cargo run --example config_file`

use ilc_core::harness::config::PAPER_SEC5;
use ilc_core::harness::parse_config;

const MINIMAL: &str = r#"
num_trials = 10

[plant]
numerator = [1.0]
denominator = [1.0, -1.0]
sample_time_s = 0.001

[controller]
numerator = [0.5]
denominator = [1.0]
sample_time_s = 0.001
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let loaded = parse_config(MINIMAL)?;
    println!("filled by defaults:");
    for d in &loaded.defaulted {
        println!("  {d}");
    }

    let broken = MINIMAL.replace("num_trials = 10", "num_trials = 10\nhorizon_samples = 1\nseeds = []") + "\n[weights]\nw_e = 0.0\n";
    match parse_config(&broken) {
        Err(e) => println!("{e}"),
        Ok(_) => println!("unexpectedly valid"),
    }
    match parse_config(&(MINIMAL.to_string() + "\n[acilc]\ngama = 0.5\n")) {
        Err(e) => println!("{e}"),
        Ok(_) => println!("unexpectedly valid"),
    }

    println!("preset paper_sec5 is {} lines", PAPER_SEC5.lines().count());
    Ok(())
}

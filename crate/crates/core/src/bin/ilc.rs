use clap::{Parser, Subcommand};
use ilc_core::harness::{self, compare_runs, load_config, read_log, LoadedConfig, MethodKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ilc", version, about = "Norm-optimal and actor-critic ILC experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config (a file path or `preset:paper_sec5`).
    Run {
        config: String,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two log.csv files.
    Compare { log_a: PathBuf, log_b: PathBuf },
    /// Print Q, L and the convergence margin for a config.
    Gains {
        config: String,
        /// Also write gains.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(spec: &str) -> Result<LoadedConfig, Box<dyn std::error::Error>> {
    Ok(match spec.strip_prefix("preset:") {
        Some(name) => harness::preset(name)?,
        None => load_config(std::path::Path::new(spec))?,
    })
}

fn method_of(path: &std::path::Path) -> MethodKind {
    if path.components().any(|c| c.as_os_str() == "noilc") {
        MethodKind::Noilc
    } else {
        MethodKind::Acilc
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Run { config, seed, trials, out } => {
            let mut loaded = load(&config)?;
            if let Some(s) = seed {
                loaded.config.seeds = vec![s];
            }
            if let Some(t) = trials {
                loaded.config.num_trials = t;
            }
            let out = out.unwrap_or_else(|| PathBuf::from(&loaded.config.output_dir));
            let result = harness::run_experiment(&loaded)?;
            result.write(&out)?;
            for (s, err) in result.summaries() {
                let seed = s.seed.map(|x| format!(" seed {x}")).unwrap_or_default();
                match err {
                    Some(e) => println!("{}{seed}: {e}", s.method),
                    None => println!(
                        "{}{seed}: final cost {:.6e}, settled at trial {}, upsilon {:?}",
                        s.method, s.final_cost, s.convergence_trial, s.final_upsilon
                    ),
                }
            }
            if let Some(n) = &result.noilc {
                println!("convergence margin {:.3e}", n.gains.convergence_margin);
            }
            println!("wrote {}", out.display());
        }
        Cmd::Compare { log_a, log_b } => {
            let a = read_log(&log_a, method_of(&log_a))?;
            let b = read_log(&log_b, method_of(&log_b))?;
            let c = compare_runs(&a, &b)?;
            println!("final cost A {:.6e}, B {:.6e}, ratio B/A {:.6}", c.a.final_cost, c.b.final_cost, c.final_cost_ratio);
            println!("final upsilon A {:?}", c.a.final_upsilon);
            println!("final upsilon B {:?}", c.b.final_upsilon);
            println!("upsilon delta (B - A) {:?}", c.upsilon_delta);
            match c.feedforward_max_abs_diff {
                Some(d) => println!("max |f_B - f_A| {d:.6e}"),
                None => println!("max |f_B - f_A| unavailable (f_final.csv missing)"),
            }
        }
        Cmd::Gains { config, out } => {
            let loaded = load(&config)?;
            let (_, g) = harness::gains_for(&loaded.config)?;
            println!("Q =\n{}", g.q);
            println!("L: {} x {}, max |L| = {:.6e}", g.l.nrows(), g.l.ncols(), g.l.amax());
            println!("convergence margin sigma_max(Q - L J Psi) = {:.6e}", g.convergence_margin);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                g.write_csv(&dir.join("gains.csv"))?;
                println!("wrote {}", dir.join("gains.csv").display());
            }
        }
    }
    Ok(())
}

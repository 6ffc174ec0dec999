//! Runs every acceptance criterion at the default configuration and prints one
//! line per criterion. Exits nonzero if any criterion fails.

use infpdo::harness::{criteria, ExperimentConfig};
use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let cfg = ExperimentConfig::default();
    cfg.validate().expect("default config is valid");
    println!("acceptance: config {} ({})", cfg.hash(), cfg.budgets());
    let mut failed = 0;
    for id in 1..=criteria::COUNT {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let o = criteria::evaluate(id, &cfg);
        if !o.passed {
            failed += 1;
        }
        println!("{}\t[{:.1}s]", o.line(), t0.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}

//! Configuration, fixtures, named suites and report emission.

pub mod config;
pub mod criteria;
pub mod fixtures;
pub mod report;

pub use config::{ExperimentConfig, SequenceSpec};
pub use report::{Outcome, ReportBundle, Table};

use crate::error::{Error, Result};
use crate::par;
use crate::symbols::seminorm::{gamma_seminorm, ClassParams, ScanBudget};
use crate::symbols::{SymbolFile, SymbolFn};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "INFPDO_THREADS";

/// Apply [`THREADS_ENV`] if set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        par::set_threads(n);
    }
    Ok(())
}

/// Criterion ids making up a suite.
pub fn suite_criteria(suite: &str) -> Result<Vec<usize>> {
    Ok(match suite {
        "weights-suite" => vec![1, 11],
        "ultrapoly-suite" => vec![2],
        "partition-suite" => vec![3],
        "quantize-suite" => vec![4, 5, 7, 8],
        "calculus-suite" => vec![6, 9, 10],
        "all" => (1..=criteria::COUNT).collect(),
        _ => return Err(Error::Config(format!("unknown suite `{suite}`"))),
    })
}

/// Run the configured suite. Criteria run concurrently; the bundle keeps id order.
pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let ids = suite_criteria(&cfg.suite)?;
    let outcomes = par::map(ids.len(), |i| criteria::evaluate(ids[i], cfg));
    let mut extra = Vec::new();
    if let Some(path) = &cfg.symbol_file {
        extra.push(symbol_table(cfg, &SymbolFile::load(path)?)?);
    }
    Ok(ReportBundle {
        run_id: cfg.run_id.clone(),
        suite: cfg.suite.clone(),
        config_hash: cfg.hash(),
        budgets: cfg.budgets(),
        outcomes,
        extra,
    })
}

/// Gamma seminorms of the configured symbols at `h = 1`, `m = 1`.
fn symbol_table(cfg: &ExperimentConfig, file: &SymbolFile) -> Result<Table> {
    let seq = cfg.sequence.build(cfg.horizon)?;
    let params = ClassParams {
        a: seq.clone(),
        b: seq.clone(),
        m_seq: seq,
        rho: 1.0,
        h: 1.0,
        m: 1.0,
        big_b: 1.0,
    };
    params.check()?;
    let budget = ScanBudget {
        order: cfg.budget_k,
        extent: 12.0,
        points: cfg.scan_points,
    };
    let mut t = Table::new("symbols", &["name", "gamma_norm", "saturated"]);
    for name in &cfg.symbols {
        let s = SymbolFn::new(file.get(name)?.clone());
        let r = gamma_seminorm(&s, &params, budget);
        t.push(vec![
            name.clone(),
            report::fmt(r.value),
            r.saturated.to_string(),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_partition_the_criteria() {
        let mut all: Vec<usize> = config::SUITES[..5]
            .iter()
            .flat_map(|s| suite_criteria(s).unwrap())
            .collect();
        all.sort();
        assert_eq!(all, suite_criteria("all").unwrap());
    }

    #[test]
    fn quick_suite_writes_reports() {
        let dir = std::env::temp_dir().join(format!("infpdo-harness-{}", std::process::id()));
        let cfg = ExperimentConfig::parse(&format!(
            "run_id = t\nsuite = ultrapoly-suite\nout_dir = {}",
            dir.display()
        ))
        .unwrap();
        let b = run(&cfg).unwrap();
        assert!(b.passed());
        let run_dir = b.write(&cfg.out_dir).unwrap();
        let summary = std::fs::read_to_string(run_dir.join("summary.txt")).unwrap();
        assert!(summary.contains(&cfg.hash()));
        assert!(run_dir.join("c02_sinh.tsv").is_file());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

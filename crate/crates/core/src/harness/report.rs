//! Tab-separated tables and run summaries.

use crate::error::{Error, Result};
use std::path::{Path, PathBuf};

/// Fixed-precision float formatting used in every table.
pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// TSV body; `preamble` lines are written as `# ` comments first.
    pub fn to_tsv(&self, preamble: &[String]) -> String {
        let mut s = String::new();
        for p in preamble {
            s.push_str("# ");
            s.push_str(p);
            s.push('\n');
        }
        s.push_str(&self.header.join("\t"));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        s
    }
}

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{}\t{:>2}\t{}\t{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub run_id: String,
    pub suite: String,
    pub config_hash: String,
    pub budgets: String,
    pub outcomes: Vec<Outcome>,
    pub extra: Vec<Table>,
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    fn preamble(&self) -> Vec<String> {
        vec![
            format!("run_id={} suite={}", self.run_id, self.suite),
            format!("config_hash={}", self.config_hash),
            format!("budgets {}", self.budgets),
        ]
    }

    pub fn summary(&self) -> String {
        let mut s: String = self.preamble().iter().map(|l| format!("{l}\n")).collect();
        for o in &self.outcomes {
            s.push_str(&o.line());
            s.push('\n');
        }
        let n = self.outcomes.iter().filter(|o| o.passed).count();
        s.push_str(&format!("passed {n}/{}\n", self.outcomes.len()));
        s
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.outcomes
            .iter()
            .flat_map(|o| &o.tables)
            .chain(&self.extra)
    }

    /// Write `<dir>/<run_id>/summary.txt` and one TSV per table; returns the run directory.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let run = dir.join(&self.run_id);
        std::fs::create_dir_all(&run).map_err(|e| Error::io(&run, e))?;
        let put = |name: String, body: String| -> Result<()> {
            let p = run.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("summary.txt".into(), self.summary())?;
        let pre = self.preamble();
        for t in self.tables() {
            put(format!("{}.tsv", t.name), t.to_tsv(&pre))?;
        }
        Ok(run)
    }
}

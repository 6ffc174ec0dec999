//! Flat `key = value` experiment configuration.

use crate::error::{Error, Result};
use crate::mollify::BumpProfile;
use crate::quantize::Grid;
use crate::symbols::SymbolFile;
use crate::weights::WeightSequence;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const SUITES: [&str; 6] = [
    "weights-suite",
    "ultrapoly-suite",
    "partition-suite",
    "quantize-suite",
    "calculus-suite",
    "all",
];

const MAX_ORDER: usize = 12;
const MAX_HORIZON: usize = 4096;
const MAX_GRID: usize = 2048;

/// Where a weight sequence comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Gevrey(f64),
    Counterexample,
    CounterexampleBase,
    File(PathBuf),
}

impl SequenceSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t == "counterexample" {
            return Ok(SequenceSpec::Counterexample);
        }
        if t == "counterexample-base" {
            return Ok(SequenceSpec::CounterexampleBase);
        }
        if let Some(s) = t.strip_prefix("gevrey:") {
            let s: f64 = s
                .parse()
                .map_err(|_| Error::Config(format!("bad Gevrey index `{s}`")))?;
            return Ok(SequenceSpec::Gevrey(s));
        }
        if let Some(p) = t.strip_prefix("file:") {
            return Ok(SequenceSpec::File(PathBuf::from(p)));
        }
        Err(Error::Config(format!(
            "sequence `{t}`: expected gevrey:<s>, counterexample, counterexample-base or file:<path>"
        )))
    }

    pub fn build(&self, horizon: usize) -> Result<WeightSequence> {
        match self {
            SequenceSpec::Gevrey(s) => WeightSequence::gevrey(*s, horizon),
            SequenceSpec::Counterexample => WeightSequence::counterexample(horizon),
            SequenceSpec::CounterexampleBase => WeightSequence::counterexample_base(horizon),
            SequenceSpec::File(p) => WeightSequence::load(p),
        }
    }
}

impl std::fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SequenceSpec::Gevrey(s) => write!(f, "gevrey:{s}"),
            SequenceSpec::Counterexample => write!(f, "counterexample"),
            SequenceSpec::CounterexampleBase => write!(f, "counterexample-base"),
            SequenceSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub suite: String,
    pub sequence: SequenceSpec,
    pub symbol_file: Option<PathBuf>,
    pub symbols: Vec<String>,
    pub grid: Grid,
    pub amplitude_grid: Grid,
    pub taus: Vec<f64>,
    /// Derivative order of seminorm scans.
    pub budget_k: usize,
    pub scan_points: usize,
    pub n_max: usize,
    pub horizon: usize,
    /// Gevrey order of the cutoff profiles.
    pub bump_s: f64,
    pub partition_r: f64,
    /// `B` of the resummation class parameters.
    pub resum_b: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            run_id: "default".into(),
            suite: "all".into(),
            sequence: SequenceSpec::Gevrey(2.0),
            symbol_file: None,
            symbols: Vec::new(),
            grid: Grid::default(),
            amplitude_grid: Grid::new(128, 12.0).expect("valid grid"),
            taus: vec![0.0, 0.5, 1.0],
            budget_k: 6,
            scan_points: 97,
            n_max: 6,
            horizon: 64,
            bump_s: 2.0,
            partition_r: 4.0,
            resum_b: 0.25,
            seed: 0,
            out_dir: PathBuf::from("runs"),
        }
    }
}

fn list_f64(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number `{s}`")))
        })
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Defaults overridden by each `key = value` line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                column: 1,
                message: "expected `key = value`".into(),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Apply an override given as `key=value`.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "run_id" => {
                if v.is_empty() || v.contains(['/', '\\']) || v == "." || v == ".." {
                    return Err(Error::Config(format!("run_id `{v}` is not a plain name")));
                }
                self.run_id = v.into()
            }
            "suite" => self.suite = v.into(),
            "sequence" => self.sequence = SequenceSpec::parse(v)?,
            "symbol_file" => self.symbol_file = if v.is_empty() { None } else { Some(v.into()) },
            "symbols" => {
                self.symbols = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "grid" => self.grid = Grid::parse(v)?,
            "amplitude_grid" => self.amplitude_grid = Grid::parse(v)?,
            "taus" => self.taus = list_f64(v)?,
            "budget_k" => self.budget_k = num(key, v)?,
            "scan_points" => self.scan_points = num(key, v)?,
            "n_max" => self.n_max = num(key, v)?,
            "horizon" => self.horizon = num(key, v)?,
            "bump_s" => self.bump_s = num(key, v)?,
            "partition_r" => self.partition_r = num(key, v)?,
            "resum_b" => self.resum_b = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out_dir" => self.out_dir = v.into(),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// One `key = value` line per field in a fixed order.
    pub fn canonical(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let grid = |g: &Grid| format!("{},{}", g.n(), g.l());
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("run_id", self.run_id.clone());
        put("suite", self.suite.clone());
        put("sequence", self.sequence.to_string());
        put(
            "symbol_file",
            self.symbol_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put("symbols", self.symbols.join(","));
        put("grid", grid(&self.grid));
        put("amplitude_grid", grid(&self.amplitude_grid));
        put("taus", join(&self.taus));
        put("budget_k", self.budget_k.to_string());
        put("scan_points", self.scan_points.to_string());
        put("n_max", self.n_max.to_string());
        put("horizon", self.horizon.to_string());
        put("bump_s", self.bump_s.to_string());
        put("partition_r", self.partition_r.to_string());
        put("resum_b", self.resum_b.to_string());
        put("seed", self.seed.to_string());
        put("out_dir", self.out_dir.display().to_string());
        s
    }

    /// SHA-256 of [`Self::canonical`] without the output directory.
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("out_dir"))
            .map(|l| format!("{l}\n"))
            .collect();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn budgets(&self) -> String {
        format!(
            "K={} scan_points={} n_max={} horizon={} grid={},{} amplitude_grid={},{}",
            self.budget_k,
            self.scan_points,
            self.n_max,
            self.horizon,
            self.grid.n(),
            self.grid.l(),
            self.amplitude_grid.n(),
            self.amplitude_grid.l()
        )
    }

    /// Check references and budgets before any work starts.
    pub fn validate(&self) -> Result<()> {
        if !SUITES.contains(&self.suite.as_str()) {
            return Err(Error::Config(format!(
                "unknown suite `{}`; expected one of {}",
                self.suite,
                SUITES.join(", ")
            )));
        }
        if self.budget_k > MAX_ORDER {
            return Err(Error::Config(format!(
                "budget_k {} exceeds {MAX_ORDER}",
                self.budget_k
            )));
        }
        if self.scan_points < 3 {
            return Err(Error::Config("scan_points must be at least 3".into()));
        }
        if !(1..=crate::calculus::MAX_TERMS).contains(&self.n_max) {
            return Err(Error::Config(format!(
                "n_max must be in 1..={}",
                crate::calculus::MAX_TERMS
            )));
        }
        if self.horizon < 32 || self.horizon > MAX_HORIZON {
            return Err(Error::Config(format!(
                "horizon must be in 32..={MAX_HORIZON}"
            )));
        }
        if self.grid.n() > MAX_GRID || self.amplitude_grid.n() > MAX_GRID {
            return Err(Error::Config(format!("grid size exceeds {MAX_GRID}")));
        }
        if self.taus.is_empty() || self.taus.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config(
                "taus must be a nonempty list of numbers".into(),
            ));
        }
        BumpProfile::new(self.bump_s, 2.0, 3.0)?;
        self.sequence.build(self.horizon)?;
        if let Some(path) = &self.symbol_file {
            let file = SymbolFile::load(path)?;
            for name in &self.symbols {
                file.get(name)?;
            }
        } else if let Some(name) = self.symbols.first() {
            return Err(Error::Config(format!(
                "symbol `{name}` listed without a symbol_file"
            )));
        }
        Ok(())
    }
}

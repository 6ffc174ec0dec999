//! Built-in sequences, symbols and test functions.

use super::config::SequenceSpec;
use crate::error::{Error, Result};
use crate::quantize::{hermite_testfn, Grid, GridFunction};
use crate::symbols::{Expr, SymbolFile};
use crate::ultrapoly::{Mode, Ultrapolynomial};
use crate::weights::WeightSequence;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    Sequence,
    Symbol,
    TestFunction,
}

impl FixtureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixtureKind::Sequence => "sequence",
            FixtureKind::Symbol => "symbol",
            FixtureKind::TestFunction => "testfn",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub kind: FixtureKind,
    pub description: String,
}

/// Expression fixtures as `(name, expression)`.
pub const SYMBOLS: [(&str, &str); 8] = [
    ("one", "1"),
    ("xi", "xi"),
    ("x", "x"),
    ("x-xi", "x*xi"),
    ("xi2", "xi^2"),
    ("gaussian-ξ", "exp(-xi^2/2)"),
    ("gaussian-xξ", "exp(-x^2 - xi^2)"),
    ("bracket-x-2", "angle(x)^(-2)"),
];

/// The ultrapolynomial fixture is not an expression.
pub const ULTRAPOLY_SYMBOL: &str = "ultrapoly-p1";

pub const HERMITE_MAX: usize = 5;

pub fn fixtures() -> Vec<Fixture> {
    let mut out = vec![
        Fixture {
            name: "gevrey(s)".into(),
            kind: FixtureKind::Sequence,
            description: "M_p = p!^s, written gevrey:<s>".into(),
        },
        Fixture {
            name: "counterexample".into(),
            kind: FixtureKind::Sequence,
            description: "M_p = p!^2 R_p with r_j = j^(1 - 1/(2 sqrt(ln j)))".into(),
        },
        Fixture {
            name: "counterexample-base".into(),
            kind: FixtureKind::Sequence,
            description: "A_p = p!^2, paired with counterexample".into(),
        },
    ];
    for (name, e) in SYMBOLS {
        out.push(Fixture {
            name: name.into(),
            kind: FixtureKind::Symbol,
            description: e.into(),
        });
    }
    out.push(Fixture {
        name: ULTRAPOLY_SYMBOL.into(),
        kind: FixtureKind::Symbol,
        description: "P(xi) for M_p = p!, l = 1, q = 1 on |xi| <= 40".into(),
    });
    for k in 0..=HERMITE_MAX {
        out.push(Fixture {
            name: format!("hermite:{k}"),
            kind: FixtureKind::TestFunction,
            description: format!("normalized Hermite function h_{k}"),
        });
    }
    out
}

/// Look up an expression fixture; `xi` may be spelled `ξ` and vice versa.
pub fn fixture_symbol(name: &str) -> Option<Expr> {
    let norm = name.replace("xi", "ξ");
    SYMBOLS
        .iter()
        .find(|(n, _)| *n == name || n.replace("xi", "ξ") == norm)
        .map(|(_, e)| Expr::parse(e).expect("fixture expressions parse"))
}

pub fn ultrapoly_symbol() -> Result<Ultrapolynomial> {
    let seq = WeightSequence::gevrey(1.0, 64)?;
    Ultrapolynomial::build(&seq, Mode::Beurling { l: 1.0 }, 1, 40.0)
}

pub fn fixture_sequence(spec: &str, horizon: usize) -> Result<WeightSequence> {
    SequenceSpec::parse(spec)?.build(horizon)
}

/// `hermite:<k>` or a bare `<k>`.
pub fn testfn(spec: &str, grid: Grid) -> Result<GridFunction> {
    let k = spec.strip_prefix("hermite:").unwrap_or(spec);
    let k: usize = k
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("test function `{spec}`: expected hermite:<k>")))?;
    hermite_testfn(k, grid)
}

/// Resolve `file.sym:name`, a fixture name, or an inline expression.
pub fn resolve_symbol(spec: &str) -> Result<Expr> {
    if let Some((path, name)) = spec.rsplit_once(':') {
        if Path::new(path).is_file() {
            return Ok(SymbolFile::load(path)?.get(name)?.clone());
        }
        if path.ends_with(".sym") {
            return Err(Error::Config(format!("symbol file `{path}` not found")));
        }
    }
    if let Some(e) = fixture_symbol(spec) {
        return Ok(e);
    }
    Expr::parse(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Var;

    #[test]
    fn listing_contains_named_fixtures() {
        let names: Vec<String> = fixtures().into_iter().map(|f| f.name).collect();
        assert!(names.iter().any(|n| n == "counterexample"));
        assert!(names.iter().any(|n| n == "gaussian-xξ"));
        assert!(names.iter().any(|n| n == "hermite:5"));
    }

    #[test]
    fn every_symbol_parses_and_differentiates() {
        for (name, _) in SYMBOLS {
            let e = fixture_symbol(name).unwrap();
            let d = e.diff(Var::x()).diff(Var::xi());
            assert!(d.eval3(0.3, -0.7, 0.0).re.is_finite(), "{name}");
        }
        let p = ultrapoly_symbol().unwrap();
        assert!(p.derivatives(1.5, 3).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn resolution_order() {
        assert_eq!(
            resolve_symbol("gaussian-xxi").unwrap(),
            fixture_symbol("gaussian-xξ").unwrap()
        );
        assert_eq!(
            resolve_symbol("x*xi").unwrap(),
            Expr::parse("x*xi").unwrap()
        );
        assert!(resolve_symbol("missing.sym:a").is_err());
        assert!(testfn("hermite:2", Grid::default()).is_ok());
        assert!(testfn("gauss", Grid::default()).is_err());
    }
}

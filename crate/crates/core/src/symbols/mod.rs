//! Symbols: parsing, exact manipulation, numeric derivative access, and
//! weighted seminorm scans.

pub mod ast;
pub mod expr;
pub mod rational;
pub mod seminorm;

pub use expr::{Expr, Poly, Tape, Var};
pub use rational::Cq;

use crate::error::{Error, Result};
use crate::mollify::Excision;
use crate::ultrapoly::Ultrapolynomial;
use num_complex::Complex64;
use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;

type C64 = Complex64;

/// Derivative convention: plain `d` or `D = (1/i) d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Partial,
    D,
}

/// `D_xi^alpha D_x^beta` (or the plain partials) of `a`, for multi-indices over
/// `xi_1..` / `x_1..` (index 0 of a one-dimensional symbol is the bare `xi`, `x`).
pub fn differentiate(
    a: &Expr,
    alpha: &[u32],
    beta: &[u32],
    conv: Convention,
    budget: usize,
) -> Result<Expr> {
    let total: u32 = alpha.iter().chain(beta).sum();
    if total as usize > budget {
        return Err(Error::param(format!(
            "derivative order {total} exceeds budget {budget}"
        )));
    }
    let d = alpha.len().max(beta.len());
    let var = |i: usize, xi: bool| {
        let idx = if d <= 1 { 0 } else { i as u8 + 1 };
        if xi {
            Var::Xi(idx)
        } else {
            Var::X(idx)
        }
    };
    let mut e = a.clone();
    for (i, &k) in alpha.iter().enumerate() {
        e = e.diff_n(var(i, true), k as usize);
    }
    for (i, &k) in beta.iter().enumerate() {
        e = e.diff_n(var(i, false), k as usize);
    }
    if conv == Convention::D {
        e = e.scale(&Cq::minus_i_pow(total as usize));
    }
    Ok(e)
}

/// A function of `(x, xi)` with access to mixed partial derivatives.
pub trait Symbol: Sync {
    /// `out[alpha][beta] = d_xi^alpha d_x^beta a(x, xi)` for `alpha, beta <= order`.
    fn derivatives(&self, x: f64, xi: f64, order: usize) -> Vec<Vec<C64>>;

    fn value(&self, x: f64, xi: f64) -> C64 {
        self.derivatives(x, xi, 0)[0][0]
    }

    /// True when the symbol is known not to depend on `x`.
    fn x_independent(&self) -> bool {
        false
    }
}

/// A function of `(x, y, xi)`.
pub trait Amplitude: Sync {
    /// `out[alpha][beta][gamma] = d_xi^alpha d_x^beta d_y^gamma a`.
    fn derivatives(&self, x: f64, y: f64, xi: f64, order: usize) -> Vec<Vec<Vec<C64>>>;

    fn value(&self, x: f64, y: f64, xi: f64) -> C64 {
        self.derivatives(x, y, xi, 0)[0][0][0]
    }
}

/// Expression-backed symbol; derivative tapes are built on demand and cached.
pub struct SymbolFn {
    expr: Expr,
    value: Tape,
    // tapes[alpha][beta]
    tapes: RwLock<Vec<Vec<Tape>>>,
}

impl SymbolFn {
    pub fn new(expr: Expr) -> Self {
        let value = expr.compile();
        SymbolFn {
            tapes: RwLock::new(vec![vec![value.clone()]]),
            value,
            expr,
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    fn ensure(&self, order: usize) {
        if self.tapes.read().unwrap().len() > order {
            return;
        }
        let mut rows = Vec::with_capacity(order + 1);
        let mut da = self.expr.clone();
        for a in 0..=order {
            if a > 0 {
                da = da.diff(Var::xi());
            }
            let mut row = Vec::with_capacity(order + 1);
            let mut db = da.clone();
            for b in 0..=order {
                if b > 0 {
                    db = db.diff(Var::x());
                }
                row.push(db.compile());
            }
            rows.push(row);
        }
        let mut w = self.tapes.write().unwrap();
        if w.len() <= order {
            *w = rows;
        }
    }
}

impl Symbol for SymbolFn {
    fn derivatives(&self, x: f64, xi: f64, order: usize) -> Vec<Vec<C64>> {
        self.ensure(order);
        let t = self.tapes.read().unwrap();
        (0..=order)
            .map(|a| (0..=order).map(|b| t[a][b].eval3(x, xi, 0.0)).collect())
            .collect()
    }

    fn value(&self, x: f64, xi: f64) -> C64 {
        self.value.eval3(x, xi, 0.0)
    }

    fn x_independent(&self) -> bool {
        !self.expr.depends_on(Var::x())
    }
}

/// Expression-backed amplitude in `(x, y, xi)`.
pub struct AmplitudeFn {
    expr: Expr,
    value: Tape,
    tapes: RwLock<Vec<Vec<Vec<Tape>>>>,
}

impl AmplitudeFn {
    pub fn new(expr: Expr) -> Self {
        let value = expr.compile();
        AmplitudeFn {
            tapes: RwLock::new(vec![vec![vec![value.clone()]]]),
            value,
            expr,
        }
    }

    /// `a((1 - tau) x + tau y, xi)` for a symbol expression `a`.
    pub fn from_symbol(a: &Expr, tau: &Cq) -> Self {
        let one_minus = &Cq::int(1) - tau;
        let arg = Expr::add(vec![
            Expr::var(Var::x()).scale(&one_minus),
            Expr::var(Var::y()).scale(tau),
        ]);
        Self::new(a.subs(Var::x(), &arg))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    fn ensure(&self, order: usize) {
        if self.tapes.read().unwrap().len() > order {
            return;
        }
        let mut out = Vec::with_capacity(order + 1);
        let mut da = self.expr.clone();
        for a in 0..=order {
            if a > 0 {
                da = da.diff(Var::xi());
            }
            let mut rows = Vec::with_capacity(order + 1);
            let mut db = da.clone();
            for b in 0..=order {
                if b > 0 {
                    db = db.diff(Var::x());
                }
                let mut row = Vec::with_capacity(order + 1);
                let mut dc = db.clone();
                for c in 0..=order {
                    if c > 0 {
                        dc = dc.diff(Var::y());
                    }
                    row.push(dc.compile());
                }
                rows.push(row);
            }
            out.push(rows);
        }
        let mut w = self.tapes.write().unwrap();
        if w.len() <= order {
            *w = out;
        }
    }
}

impl Amplitude for AmplitudeFn {
    fn derivatives(&self, x: f64, y: f64, xi: f64, order: usize) -> Vec<Vec<Vec<C64>>> {
        self.ensure(order);
        let t = self.tapes.read().unwrap();
        (0..=order)
            .map(|a| {
                (0..=order)
                    .map(|b| (0..=order).map(|c| t[a][b][c].eval3(x, xi, y)).collect())
                    .collect()
            })
            .collect()
    }

    fn value(&self, x: f64, y: f64, xi: f64) -> C64 {
        self.value.eval3(x, xi, y)
    }
}

impl Symbol for Ultrapolynomial {
    /// NaN outside the working radius.
    fn derivatives(&self, _x: f64, xi: f64, order: usize) -> Vec<Vec<C64>> {
        let d = self
            .derivatives(xi, order)
            .unwrap_or_else(|_| vec![f64::NAN; order + 1]);
        d.iter()
            .map(|v| {
                let mut row = vec![C64::new(0.0, 0.0); order + 1];
                row[0] = C64::new(*v, 0.0);
                row
            })
            .collect()
    }

    fn x_independent(&self) -> bool {
        true
    }
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1.0;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + if j < i { c[i - 1][j] } else { 0.0 };
        }
    }
    c
}

/// Mixed-partial Leibniz rule for `f * g` from their derivative tables.
pub fn leibniz(f: &[Vec<C64>], g: &[Vec<f64>]) -> Vec<Vec<C64>> {
    let n = f.len() - 1;
    let c = binomials(n);
    let mut out = vec![vec![C64::new(0.0, 0.0); n + 1]; n + 1];
    for a in 0..=n {
        for b in 0..=n {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..=a {
                for j in 0..=b {
                    let gv = g[i][j];
                    if gv != 0.0 {
                        s += c[a][i] * c[b][j] * gv * f[a - i][b - j];
                    }
                }
            }
            out[a][b] = s;
        }
    }
    out
}

/// `(1 - chi_n) a`, the excised tail of a symbol.
pub struct Excised<'a> {
    pub inner: &'a dyn Symbol,
    pub excision: &'a Excision,
    pub n: usize,
}

impl Symbol for Excised<'_> {
    fn derivatives(&self, x: f64, xi: f64, order: usize) -> Vec<Vec<C64>> {
        let mut g = self.excision.derivatives(self.n, x, xi, order);
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        g[0][0] += 1.0;
        leibniz(&self.inner.derivatives(x, xi, order), &g)
    }
}

/// Difference `a - b` of two symbols.
pub struct Difference<'a>(pub &'a dyn Symbol, pub &'a dyn Symbol);

impl Symbol for Difference<'_> {
    fn derivatives(&self, x: f64, xi: f64, order: usize) -> Vec<Vec<C64>> {
        let mut a = self.0.derivatives(x, xi, order);
        let b = self.1.derivatives(x, xi, order);
        for (ra, rb) in a.iter_mut().zip(&b) {
            for (u, v) in ra.iter_mut().zip(rb) {
                *u -= v;
            }
        }
        a
    }
}

/// Finite list of exact terms `a_0, a_1, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalSeries {
    pub terms: Vec<Expr>,
}

impl FormalSeries {
    pub fn new(terms: Vec<Expr>) -> Self {
        FormalSeries { terms }
    }

    pub fn singleton(a: Expr) -> Self {
        FormalSeries { terms: vec![a] }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, j: usize) -> Expr {
        self.terms.get(j).cloned().unwrap_or_else(Expr::zero)
    }

    /// Drop trailing zero terms.
    pub fn trimmed(&self) -> Self {
        let mut t = self.terms.clone();
        while t.last().is_some_and(|e| e.is_zero()) {
            t.pop();
        }
        FormalSeries { terms: t }
    }

    /// Terms compiled for numeric evaluation.
    pub fn symbols(&self) -> Vec<SymbolFn> {
        self.terms.iter().cloned().map(SymbolFn::new).collect()
    }
}

/// Named definitions `name = expr`, one per line; later lines may refer to
/// earlier names.
#[derive(Debug, Clone, Default)]
pub struct SymbolFile {
    order: Vec<String>,
    defs: HashMap<String, Expr>,
}

impl SymbolFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut f = SymbolFile::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let Some(eq) = body.find('=') else {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: "expected `name = expression`".into(),
                });
            };
            let name = body[..eq].trim();
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !valid || name == "i" || Var::from_name(name).is_some() {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: format!("invalid definition name `{name}`"),
                });
            }
            let rhs = &body[eq + 1..];
            let e = Expr::parse_with(rhs, line, &f.defs).map_err(|e| match e {
                Error::Parse {
                    line,
                    column,
                    message,
                } => Error::Parse {
                    line,
                    column: column + eq + 1,
                    message,
                },
                other => other,
            })?;
            if f.defs.insert(name.to_string(), e).is_none() {
                f.order.push(name.to_string());
            }
        }
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, name: &str) -> Result<&Expr> {
        self.defs
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn names(&self) -> &[String] {
        &self.order
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollify::fd_derivative;

    #[test]
    fn d_convention() {
        let a = Expr::parse("x*xi").unwrap();
        let d = differentiate(&a, &[], &[1], Convention::D, 6).unwrap();
        assert_eq!(d, Expr::parse("xi/i").unwrap());
        let g = Expr::parse("exp(-x^2 - xi^2)").unwrap();
        let d = differentiate(&g, &[1], &[1], Convention::Partial, 6).unwrap();
        assert_eq!(d, Expr::parse("4*x*xi*exp(-x^2 - xi^2)").unwrap());
        assert!(differentiate(&g, &[4], &[3], Convention::D, 6).is_err());
    }

    #[test]
    fn bracket_derivative_matches_differences() {
        let a = Expr::parse("angle(x)^(-2)").unwrap();
        let d = a.diff(Var::x()).eval3(1.0, 0.0, 0.0).re;
        let f = |t: f64| 1.0 / (1.0 + t * t);
        assert!((d - fd_derivative(&f, 1.0, 1, 1e-3)).abs() < 1e-8);

        // sixth order: Richardson differences are limited by rounding, so the
        // sharp check uses a Cauchy contour of radius 1/2 around the point
        let b = Expr::parse("angle(x)^(-1)").unwrap();
        let d6 = b.diff_n(Var::x(), 6).eval3(0.7, 0.0, 0.0).re;
        let g = |t: f64| (1.0 + t * t).powf(-0.5);
        let fd = fd_derivative(&g, 0.7, 6, 0.05);
        assert!((d6 - fd).abs() < 1e-3 * d6.abs(), "{d6} vs {fd}");
        let n = 128;
        let r = 0.5;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let z = C64::new(0.7, 0.0) + C64::from_polar(r, th);
            acc += (z * z + 1.0).powf(-0.5) * C64::from_polar(1.0, -6.0 * th);
        }
        let contour = (acc / n as f64).re * 720.0 / r.powi(6);
        assert!((d6 - contour).abs() < 1e-6, "{d6} vs {contour}");
    }

    #[test]
    fn symbol_tables_and_leibniz() {
        let a = SymbolFn::new(Expr::parse("x^2*xi^3").unwrap());
        let d = a.derivatives(2.0, 3.0, 3);
        assert_eq!(d[2][1].re, 12.0 * 3.0 * 2.0);
        assert_eq!(d[3][2].re, 12.0);
        let one = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let f = a.derivatives(2.0, 3.0, 1);
        assert_eq!(leibniz(&f, &one), f);
    }

    #[test]
    fn symbol_files() {
        let f = SymbolFile::parse("# fixtures\ng = exp(-x^2 - xi^2)\nh = g*xi  # tail\n").unwrap();
        assert_eq!(f.names(), ["g", "h"]);
        assert_eq!(
            f.get("h").unwrap(),
            &Expr::parse("xi*exp(-x^2 - xi^2)").unwrap()
        );
        match SymbolFile::parse("a = x\nb = a + zz\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 9)),
            other => panic!("{other:?}"),
        }
        assert!(SymbolFile::parse("x = 1").is_err());
    }
}

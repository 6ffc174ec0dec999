//! Canonical symbolic expressions with exact complex-rational coefficients.
//!
//! Every constructor returns a normal form: sums are flattened with like terms
//! merged, products carry one leading coefficient and merged integer powers,
//! polynomial factors are distributed, and `exp` factors are combined. For
//! polynomials this makes equality of normal forms an exact zero test.

use super::ast::{self, Ast, BinOp, Func};
use super::rational::Cq;
use crate::error::{Error, Result};
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(u8),
    Xi(u8),
    Y(u8),
}

pub const MAX_INDEX: u8 = 8;
/// Number of evaluation slots: `x, x1..x8, xi, xi1.., y, y1..`.
pub const SLOTS: usize = 3 * (MAX_INDEX as usize + 1);

impl Var {
    pub const fn x() -> Var {
        Var::X(0)
    }

    pub const fn xi() -> Var {
        Var::Xi(0)
    }

    pub const fn y() -> Var {
        Var::Y(0)
    }

    pub fn slot(&self) -> usize {
        let n = MAX_INDEX as usize + 1;
        match *self {
            Var::X(i) => i as usize,
            Var::Xi(i) => n + i as usize,
            Var::Y(i) => 2 * n + i as usize,
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        let (stem, rest) = if let Some(r) = name.strip_prefix("xi") {
            ("xi", r)
        } else if let Some(r) = name.strip_prefix('x') {
            ("x", r)
        } else if let Some(r) = name.strip_prefix('y') {
            ("y", r)
        } else {
            return None;
        };
        let idx = if rest.is_empty() {
            0
        } else {
            let v: u8 = rest.parse().ok()?;
            if v == 0 || v > MAX_INDEX || rest.starts_with('0') {
                return None;
            }
            v
        };
        Some(match stem {
            "xi" => Var::Xi(idx),
            "x" => Var::X(idx),
            _ => Var::Y(idx),
        })
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (stem, i) = match *self {
            Var::X(i) => ("x", i),
            Var::Xi(i) => ("xi", i),
            Var::Y(i) => ("y", i),
        };
        if i == 0 {
            write!(f, "{stem}")
        } else {
            write!(f, "{stem}{i}")
        }
    }
}

/// A symbol expression in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(Cq),
    Var(Var),
    /// Integer power of a variable, an `angle`, or a sum (negative powers only).
    Pow(Box<Expr>, i64),
    Exp(Box<Expr>),
    /// `(1 + sum e_k^2)^{1/2}`.
    Angle(Vec<Expr>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
}

fn split(e: Expr) -> (Cq, Option<Expr>) {
    match e {
        Expr::Const(c) => (c, None),
        Expr::Mul(mut fs) => {
            if let Expr::Const(_) = fs[0] {
                let c = match fs.remove(0) {
                    Expr::Const(c) => c,
                    _ => unreachable!(),
                };
                let rest = if fs.len() == 1 {
                    fs.pop().unwrap()
                } else {
                    Expr::Mul(fs)
                };
                (c, Some(rest))
            } else {
                (Cq::int(1), Some(Expr::Mul(fs)))
            }
        }
        other => (Cq::int(1), Some(other)),
    }
}

fn with_coeff(c: Cq, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    match rest {
        Expr::Mul(mut fs) => {
            fs.insert(0, Expr::Const(c));
            Expr::Mul(fs)
        }
        other => Expr::Mul(vec![Expr::Const(c), other]),
    }
}

impl Expr {
    pub fn constant(c: Cq) -> Expr {
        Expr::Const(c)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Cq::int(n))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn as_const(&self) -> Option<&Cq> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut acc: BTreeMap<Option<Expr>, Cq> = BTreeMap::new();
        let mut stack = terms;
        while let Some(t) = stack.pop() {
            if let Expr::Add(ts) = t {
                stack.extend(ts);
                continue;
            }
            let (c, rest) = split(t);
            let slot = acc.entry(rest).or_insert_with(|| Cq::int(0));
            *slot = &*slot + &c;
        }
        let mut out: Vec<Expr> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| match rest {
                None => Expr::Const(c),
                Some(r) => with_coeff(c, r),
            })
            .collect();
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = Cq::int(1);
        let mut bases: BTreeMap<Expr, i64> = BTreeMap::new();
        let mut exp_args = Vec::new();
        let mut stack = factors;
        while let Some(f) = stack.pop() {
            match f {
                Expr::Const(c) => coeff = &coeff * &c,
                Expr::Mul(fs) => stack.extend(fs),
                Expr::Exp(a) => exp_args.push(*a),
                Expr::Pow(b, n) => *bases.entry(*b).or_insert(0) += n,
                other => *bases.entry(other).or_insert(0) += 1,
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        let mut plain = Vec::new();
        let mut sums: Vec<Expr> = Vec::new();
        for (b, n) in bases {
            if n == 0 {
                continue;
            }
            match &b {
                Expr::Angle(es) if n >= 2 => {
                    let mut sq = vec![Expr::one()];
                    sq.extend(es.iter().map(|e| Expr::mul(vec![e.clone(), e.clone()])));
                    let inner = Expr::add(sq);
                    for _ in 0..n / 2 {
                        sums.push(inner.clone());
                    }
                    if n % 2 == 1 {
                        plain.push(b);
                    }
                }
                Expr::Add(_) if n > 0 => {
                    for _ in 0..n {
                        sums.push(b.clone());
                    }
                }
                _ => plain.push(if n == 1 { b } else { Expr::Pow(Box::new(b), n) }),
            }
        }
        if !exp_args.is_empty() {
            let a = Expr::add(exp_args);
            if !a.is_zero() {
                plain.push(Expr::Exp(Box::new(a)));
            }
        }
        if !sums.is_empty() {
            let mut head = plain;
            head.push(Expr::Const(coeff));
            let mut acc = vec![Expr::mul(head)];
            for s in sums {
                let terms = match s {
                    Expr::Add(ts) => ts,
                    other => vec![other],
                };
                let mut next = Vec::with_capacity(acc.len() * terms.len());
                for a in &acc {
                    for t in &terms {
                        next.push(Expr::mul(vec![a.clone(), t.clone()]));
                    }
                }
                acc = next;
            }
            return Expr::add(acc);
        }
        plain.sort();
        if plain.is_empty() {
            return Expr::Const(coeff);
        }
        if plain.len() == 1 && coeff.is_one() {
            return plain.pop().unwrap();
        }
        if !coeff.is_one() {
            plain.insert(0, Expr::Const(coeff));
        }
        Expr::Mul(plain)
    }

    pub fn pow(base: Expr, n: i64) -> Result<Expr> {
        Ok(match (base, n) {
            (_, 0) => Expr::one(),
            (b, 1) => b,
            (Expr::Const(c), n) => Expr::Const(
                c.powi(n)
                    .ok_or_else(|| Error::Domain("division by zero".into()))?,
            ),
            (Expr::Mul(fs), n) => Expr::mul(
                fs.into_iter()
                    .map(|f| Expr::pow(f, n))
                    .collect::<Result<Vec<_>>>()?,
            ),
            (Expr::Pow(b, m), n) => Expr::pow(*b, m * n)?,
            (Expr::Exp(a), n) => Expr::exp(Expr::mul(vec![Expr::int(n), *a])),
            (b, n) => Expr::mul(vec![Expr::Pow(Box::new(b), n)]),
        })
    }

    pub fn exp(a: Expr) -> Expr {
        if a.is_zero() {
            Expr::one()
        } else {
            Expr::Exp(Box::new(a))
        }
    }

    pub fn angle(mut es: Vec<Expr>) -> Expr {
        es.retain(|e| !e.is_zero());
        if es.is_empty() {
            return Expr::one();
        }
        es.sort();
        Expr::Angle(es)
    }

    pub fn neg(&self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self.clone()])
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        Expr::add(vec![a.clone(), b.neg()])
    }

    pub fn scale(&self, c: &Cq) -> Expr {
        Expr::mul(vec![Expr::Const(c.clone()), self.clone()])
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Pow(b, _) | Expr::Exp(b) => b.collect_vars(out),
            Expr::Angle(es) | Expr::Add(es) | Expr::Mul(es) => {
                es.iter().for_each(|e| e.collect_vars(out))
            }
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Pow(b, _) | Expr::Exp(b) => b.depends_on(v),
            Expr::Angle(es) | Expr::Add(es) | Expr::Mul(es) => es.iter().any(|e| e.depends_on(v)),
        }
    }

    /// `d/dv`.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(ts) => Expr::add(ts.iter().map(|t| t.diff(v)).collect()),
            Expr::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let d = f.diff(v);
                    if d.is_zero() {
                        continue;
                    }
                    let mut g = fs.clone();
                    g[i] = d;
                    terms.push(Expr::mul(g));
                }
                Expr::add(terms)
            }
            Expr::Pow(b, n) => Expr::mul(vec![
                Expr::int(*n),
                Expr::pow((**b).clone(), n - 1).expect("non-constant base"),
                b.diff(v),
            ]),
            Expr::Exp(a) => Expr::mul(vec![self.clone(), a.diff(v)]),
            Expr::Angle(es) => {
                let num = Expr::add(
                    es.iter()
                        .map(|e| Expr::mul(vec![e.clone(), e.diff(v)]))
                        .collect(),
                );
                Expr::mul(vec![num, Expr::Pow(Box::new(self.clone()), -1)])
            }
        }
    }

    pub fn diff_n(&self, v: Var, n: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..n {
            if e.is_zero() {
                break;
            }
            e = e.diff(v);
        }
        e
    }

    /// Replace `v` by `with`.
    pub fn subs(&self, v: Var, with: &Expr) -> Expr {
        if !self.depends_on(v) {
            return self.clone();
        }
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(w) => {
                if *w == v {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Add(ts) => Expr::add(ts.iter().map(|t| t.subs(v, with)).collect()),
            Expr::Mul(fs) => Expr::mul(fs.iter().map(|t| t.subs(v, with)).collect()),
            // a zero base with negative power keeps the unsimplified form
            Expr::Pow(b, n) => {
                let nb = b.subs(v, with);
                Expr::pow(nb.clone(), *n).unwrap_or_else(|_| Expr::Pow(Box::new(nb), *n))
            }
            Expr::Exp(a) => Expr::exp(a.subs(v, with)),
            Expr::Angle(es) => Expr::angle(es.iter().map(|e| e.subs(v, with)).collect()),
        }
    }

    pub fn compile(&self) -> Tape {
        Tape {
            root: compile(self),
        }
    }

    /// Evaluate with `(x, xi, y)` in the unindexed slots.
    pub fn eval3(&self, x: f64, xi: f64, y: f64) -> Complex64 {
        self.compile().eval3(x, xi, y)
    }

    /// Exact polynomial form, if the expression is a polynomial.
    pub fn to_poly(&self) -> Option<Poly> {
        let mut out = Poly::default();
        let terms: Vec<&Expr> = match self {
            Expr::Add(ts) => ts.iter().collect(),
            other => vec![other],
        };
        for t in terms {
            let (c, rest) = split(t.clone());
            let mut mono = Vec::new();
            if let Some(r) = rest {
                let fs = match r {
                    Expr::Mul(fs) => fs,
                    other => vec![other],
                };
                for f in fs {
                    match f {
                        Expr::Var(v) => mono.push((v, 1u32)),
                        Expr::Pow(b, n) if n > 0 => match *b {
                            Expr::Var(v) => mono.push((v, n as u32)),
                            _ => return None,
                        },
                        _ => return None,
                    }
                }
            }
            mono.sort();
            if !c.is_zero() {
                out.terms.insert(mono, c);
            }
        }
        Some(out)
    }

    /// Lower a syntax tree; `defs` resolves names from a symbol file.
    pub fn from_ast(a: &Ast, defs: &HashMap<String, Expr>) -> Result<Expr> {
        Ok(match a {
            Ast::Num(s) => Expr::Const(
                Cq::parse_decimal(s).ok_or_else(|| Error::param(format!("bad number `{s}`")))?,
            ),
            Ast::Ident(name) => {
                if name == "i" {
                    Expr::Const(Cq::i())
                } else if let Some(v) = Var::from_name(name) {
                    Expr::Var(v)
                } else if let Some(e) = defs.get(name) {
                    e.clone()
                } else {
                    return Err(Error::UnknownSymbol(name.clone()));
                }
            }
            Ast::Neg(b) => Expr::from_ast(b, defs)?.neg(),
            Ast::Bin(op, l, r) => {
                let (l, r) = (Expr::from_ast(l, defs)?, Expr::from_ast(r, defs)?);
                match op {
                    BinOp::Add => Expr::add(vec![l, r]),
                    BinOp::Sub => Expr::sub(&l, &r),
                    BinOp::Mul => Expr::mul(vec![l, r]),
                    BinOp::Div => Expr::mul(vec![l, Expr::pow(r, -1)?]),
                }
            }
            Ast::Pow(b, n) => Expr::pow(Expr::from_ast(b, defs)?, *n)?,
            Ast::Call(Func::Exp, args) => Expr::exp(Expr::from_ast(&args[0], defs)?),
            Ast::Call(Func::Angle, args) => Expr::angle(
                args.iter()
                    .map(|e| Expr::from_ast(e, defs))
                    .collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    /// Parse text into normal form.
    pub fn parse(text: &str) -> Result<Expr> {
        Self::parse_with(text, 1, &HashMap::new())
    }

    pub fn parse_with(text: &str, line: usize, defs: &HashMap<String, Expr>) -> Result<Expr> {
        let a = ast::parse_line(text, line)?;
        let mut names = Vec::new();
        a.idents(&mut names);
        for n in names {
            if n != "i" && Var::from_name(&n).is_none() && !defs.contains_key(&n) {
                let column = text.find(n.as_str()).map_or(1, |k| k + 1);
                return Err(Error::Parse {
                    line,
                    column,
                    message: format!("unknown identifier `{n}`"),
                });
            }
        }
        Expr::from_ast(&a, defs)
    }
}

/// Exact multivariate polynomial.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly {
    pub terms: BTreeMap<Vec<(Var, u32)>, Cq>,
}

impl Poly {
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().map(|(_, e)| e).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn to_expr(&self) -> Expr {
        Expr::add(
            self.terms
                .iter()
                .map(|(m, c)| {
                    let mut fs = vec![Expr::Const(c.clone())];
                    for (v, e) in m {
                        fs.push(Expr::pow(Expr::Var(*v), *e as i64).expect("positive power"));
                    }
                    Expr::mul(fs)
                })
                .collect(),
        )
    }
}

/// Float evaluation tree mirroring an [`Expr`].
#[derive(Debug, Clone)]
pub struct Tape {
    root: Node,
}

#[derive(Debug, Clone)]
enum Node {
    C(Complex64),
    V(usize),
    Add(Vec<Node>),
    Mul(Vec<Node>),
    Pow(Box<Node>, i32),
    Exp(Box<Node>),
    Angle(Vec<Node>),
}

fn compile(e: &Expr) -> Node {
    match e {
        Expr::Const(c) => Node::C(c.to_c64()),
        Expr::Var(v) => Node::V(v.slot()),
        Expr::Add(ts) => Node::Add(ts.iter().map(compile).collect()),
        Expr::Mul(fs) => Node::Mul(fs.iter().map(compile).collect()),
        Expr::Pow(b, n) => Node::Pow(Box::new(compile(b)), *n as i32),
        Expr::Exp(a) => Node::Exp(Box::new(compile(a))),
        Expr::Angle(es) => Node::Angle(es.iter().map(compile).collect()),
    }
}

impl Node {
    fn eval(&self, env: &[Complex64; SLOTS]) -> Complex64 {
        match self {
            Node::C(c) => *c,
            Node::V(k) => env[*k],
            Node::Add(ts) => ts.iter().map(|t| t.eval(env)).sum(),
            Node::Mul(fs) => fs.iter().map(|t| t.eval(env)).product(),
            Node::Pow(b, n) => b.eval(env).powi(*n),
            Node::Exp(a) => a.eval(env).exp(),
            Node::Angle(es) => {
                let s: Complex64 = es
                    .iter()
                    .map(|e| {
                        let v = e.eval(env);
                        v * v
                    })
                    .sum();
                (s + 1.0).sqrt()
            }
        }
    }
}

impl Tape {
    pub fn eval(&self, env: &[Complex64; SLOTS]) -> Complex64 {
        self.root.eval(env)
    }

    pub fn eval3(&self, x: f64, xi: f64, y: f64) -> Complex64 {
        let mut env = [Complex64::new(0.0, 0.0); SLOTS];
        env[Var::x().slot()] = x.into();
        env[Var::xi().slot()] = xi.into();
        env[Var::y().slot()] = y.into();
        self.eval(&env)
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self.root, Node::C(c) if c.norm_sqr() == 0.0)
    }
}

fn fmt_factor(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Add(_) => write!(f, "({e})"),
        Expr::Const(c) if !c.im.is_zero() && !c.re.is_zero() => write!(f, "{c}"),
        _ => write!(f, "{e}"),
    }
}

fn fmt_term(f: &mut fmt::Formatter<'_>, e: &Expr, first: bool) -> fmt::Result {
    // terms with a negative real coefficient print as subtraction
    let (c, rest) = split(e.clone());
    let negative = c.im.is_zero() && c.re.is_negative();
    let c = if negative && !first { -c } else { c };
    if !first {
        write!(f, "{}", if negative { " - " } else { " + " })?;
    }
    match rest {
        None => write!(f, "{c}"),
        Some(r) => {
            if c.is_one() {
            } else if (-c.clone()).is_one() {
                write!(f, "-")?;
            } else if !c.im.is_zero() && !c.re.is_zero() {
                write!(f, "{c}*")?;
            } else if !c.im.is_zero() {
                write!(f, "({c})*")?;
            } else {
                write!(f, "{c}*")?;
            }
            let fs = match r {
                Expr::Mul(fs) => fs,
                other => vec![other],
            };
            for (k, x) in fs.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                fmt_factor(f, x)?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    /// Parseable text; `Expr::parse(&e.to_string()) == e`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Pow(b, n) => {
                match **b {
                    Expr::Var(_) | Expr::Angle(_) | Expr::Exp(_) => write!(f, "{b}")?,
                    _ => write!(f, "({b})")?,
                }
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Angle(es) => {
                write!(f, "angle(")?;
                for (k, e) in es.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Expr::Add(ts) => {
                for (k, t) in ts.iter().enumerate() {
                    fmt_term(f, t, k == 0)?;
                }
                Ok(())
            }
            Expr::Mul(_) => fmt_term(f, self, true),
        }
    }
}

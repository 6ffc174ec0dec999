//! Expansion terms of the symbolic calculus and resummation of formal series.
//!
//! All term generators work on exact expressions; in one dimension the
//! multi-index sums reduce to single sums with `1/j!` weights.

use crate::error::{Error, Result};
use crate::mollify::Excision;
use crate::quantize::{op_tau_apply, GridFunction};
use crate::symbols::seminorm::{equivalence_residual, ClassParams, ScanBudget, SeminormReport};
use crate::symbols::{Cq, Excised, Expr, FormalSeries, Symbol, SymbolFn, Var};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

/// Largest number of series terms any generator will produce.
pub const MAX_TERMS: usize = 16;

fn check_budget(n_max: usize) -> Result<()> {
    if n_max == 0 || n_max > MAX_TERMS {
        return Err(Error::param(format!(
            "term count {n_max} outside 1..={MAX_TERMS}"
        )));
    }
    Ok(())
}

fn exact(v: f64) -> Result<Cq> {
    Cq::from_f64(v).ok_or_else(|| Error::param(format!("{v} is not a finite number")))
}

fn inv_factorial(j: usize) -> Cq {
    let f: BigInt = (1..=j as u64).map(BigInt::from).product();
    Cq::real(BigRational::new(1.into(), f))
}

/// `D = (1/i) d`, applied `j` times in `v`.
fn d_pow(e: &Expr, v: Var, j: usize) -> Expr {
    e.diff_n(v, j).scale(&Cq::minus_i_pow(j))
}

/// `p_j = (1/j!) (tau1 - tau)^j d_xi^j D_x^j a`, for `j < n_max`.
pub fn change_quantization_terms(
    a: &Expr,
    tau1: f64,
    tau: f64,
    n_max: usize,
) -> Result<FormalSeries> {
    check_budget(n_max)?;
    let shift = &exact(tau1)? - &exact(tau)?;
    Ok(FormalSeries::new(
        (0..n_max).map(|j| change_term(a, &shift, j)).collect(),
    ))
}

fn change_term(a: &Expr, shift: &Cq, j: usize) -> Expr {
    if j > 0 && shift.is_zero() {
        return Expr::zero();
    }
    let w = &shift.powi(j as i64).expect("nonnegative power") * &inv_factorial(j);
    d_pow(&a.diff_n(Var::xi(), j), Var::x(), j).scale(&w)
}

/// Term-wise change of quantisation of a series, collected by total order.
pub fn change_quantization_series(
    s: &FormalSeries,
    tau1: f64,
    tau: f64,
    n_max: usize,
) -> Result<FormalSeries> {
    check_budget(n_max)?;
    let shift = &exact(tau1)? - &exact(tau)?;
    Ok(collect(s, n_max, |a, l| change_term(a, &shift, l)))
}

/// `c_j = sum_{s + l = j} op(a_s, l)`.
fn collect(s: &FormalSeries, n_max: usize, op: impl Fn(&Expr, usize) -> Expr) -> FormalSeries {
    let mut out = vec![Vec::new(); n_max];
    for (si, a) in s.terms.iter().enumerate().take(n_max) {
        if a.is_zero() {
            continue;
        }
        for l in 0..n_max - si {
            out[si + l].push(op(a, l));
        }
    }
    FormalSeries::new(out.into_iter().map(Expr::add).collect())
}

/// `t_j = (1/j!) (1 - 2 tau)^j [(-d_xi)^j D_x^j a](x, -xi)`: derivatives first,
/// then `xi -> -xi`.
pub fn transpose_terms(a: &Expr, tau: f64, n_max: usize) -> Result<FormalSeries> {
    check_budget(n_max)?;
    let w = &Cq::int(1) - &(&Cq::int(2) * &exact(tau)?);
    Ok(FormalSeries::new(
        (0..n_max).map(|j| transpose_term(a, &w, j)).collect(),
    ))
}

fn transpose_term(a: &Expr, w: &Cq, j: usize) -> Expr {
    let flip = Expr::var(Var::xi()).neg();
    if j == 0 {
        return a.subs(Var::xi(), &flip);
    }
    if w.is_zero() {
        return Expr::zero();
    }
    let sign = if j % 2 == 0 { Cq::int(1) } else { Cq::int(-1) };
    let c = &(&w.powi(j as i64).expect("nonnegative power") * &inv_factorial(j)) * &sign;
    d_pow(&a.diff_n(Var::xi(), j), Var::x(), j)
        .scale(&c)
        .subs(Var::xi(), &flip)
}

/// Term-wise transpose of a series.
pub fn transpose_series(s: &FormalSeries, tau: f64, n_max: usize) -> Result<FormalSeries> {
    check_budget(n_max)?;
    let w = &Cq::int(1) - &(&Cq::int(2) * &exact(tau)?);
    Ok(collect(s, n_max, |a, l| transpose_term(a, &w, l)))
}

/// `c_j = (1/j!) d_xi^j a * D_x^j b`.
pub fn composition_terms(a: &Expr, b: &Expr, n_max: usize) -> Result<FormalSeries> {
    check_budget(n_max)?;
    Ok(FormalSeries::new(
        (0..n_max).map(|j| composition_term(a, b, j)).collect(),
    ))
}

fn composition_term(a: &Expr, b: &Expr, j: usize) -> Expr {
    Expr::mul(vec![
        Expr::Const(inv_factorial(j)),
        a.diff_n(Var::xi(), j),
        d_pow(b, Var::x(), j),
    ])
}

/// `c_j = sum_{s+k+l=j} (1/l!) d_xi^l a_s * D_x^l b_k`.
pub fn compose_series(a: &FormalSeries, b: &FormalSeries, n_max: usize) -> Result<FormalSeries> {
    check_budget(n_max)?;
    let mut out = vec![Vec::new(); n_max];
    for (s, ai) in a.terms.iter().enumerate().take(n_max) {
        for (k, bk) in b.terms.iter().enumerate().take(n_max - s) {
            if ai.is_zero() || bk.is_zero() {
                continue;
            }
            for l in 0..n_max - s - k {
                out[s + k + l].push(composition_term(ai, bk, l));
            }
        }
    }
    Ok(FormalSeries::new(out.into_iter().map(Expr::add).collect()))
}

/// Cauchy product `c_j = sum_{s+k=j} a_s b_k`.
pub fn multiply_series(a: &FormalSeries, b: &FormalSeries, n_max: usize) -> Result<FormalSeries> {
    multiply_series_shifted(a, b, 0, n_max)
}

/// Expansion of `d_xi^alpha a * d_x^alpha b`: `alpha` leading zeros, then
/// `c_j = sum_{s+k+alpha=j} d_xi^alpha a_s * d_x^alpha b_k`.
pub fn multiply_series_shifted(
    a: &FormalSeries,
    b: &FormalSeries,
    alpha: usize,
    n_max: usize,
) -> Result<FormalSeries> {
    check_budget(n_max)?;
    let mut out = vec![Vec::new(); n_max];
    for (s, ai) in a.terms.iter().enumerate() {
        for (k, bk) in b.terms.iter().enumerate() {
            let j = s + k + alpha;
            if j >= n_max || ai.is_zero() || bk.is_zero() {
                continue;
            }
            out[j].push(Expr::mul(vec![
                ai.diff_n(Var::xi(), alpha),
                bk.diff_n(Var::x(), alpha),
            ]));
        }
    }
    Ok(FormalSeries::new(out.into_iter().map(Expr::add).collect()))
}

/// Difference between the double sum
/// `sum_{j<N} sum_{s<N-j} sum_{alpha+gamma=j} (-1)^s / (alpha! gamma! s!)
///  d_xi^gamma a * d_xi^{alpha+s} D_x^{alpha+gamma+s} b`
/// and its rearranged form `sum_{j<N} (1/j!) d_xi^j a * D_x^j b`.
pub fn leibniz_rearrangement_residual(a: &Expr, b: &Expr, n: usize) -> Expr {
    let mut lhs = Vec::new();
    for j in 0..n {
        for s in 0..n - j {
            for alpha in 0..=j {
                let gamma = j - alpha;
                let sign = if s % 2 == 0 { Cq::int(1) } else { Cq::int(-1) };
                let w =
                    &(&(&inv_factorial(alpha) * &inv_factorial(gamma)) * &inv_factorial(s)) * &sign;
                lhs.push(Expr::mul(vec![
                    Expr::Const(w),
                    a.diff_n(Var::xi(), gamma),
                    d_pow(&b.diff_n(Var::xi(), alpha + s), Var::x(), alpha + gamma + s),
                ]));
            }
        }
    }
    let rhs: Vec<Expr> = (0..n).map(|j| composition_term(a, b, j)).collect();
    Expr::sub(&Expr::add(lhs), &Expr::add(rhs))
}

/// `b = sum_j (1 - chi_j) a_j` with `chi_0 = 0`.
pub struct ResummedSymbol {
    source: FormalSeries,
    terms: Vec<SymbolFn>,
    excision: Excision,
}

impl ResummedSymbol {
    pub fn new(source: &FormalSeries, excision: Excision) -> Self {
        ResummedSymbol {
            terms: source.symbols(),
            source: source.clone(),
            excision,
        }
    }

    pub fn source(&self) -> &FormalSeries {
        &self.source
    }

    pub fn r(&self) -> f64 {
        self.excision.r()
    }

    /// Number of terms with `1 - chi_j != 0` at this point.
    pub fn active_terms(&self, x: f64, xi: f64) -> usize {
        (0..self.terms.len())
            .filter(|&j| self.excision.value(j, x, xi) < 1.0)
            .count()
    }

    pub fn terms(&self) -> &[SymbolFn] {
        &self.terms
    }
}

impl Symbol for ResummedSymbol {
    fn derivatives(&self, x: f64, xi: f64, order: usize) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); order + 1]; order + 1];
        for (j, a) in self.terms.iter().enumerate() {
            if a.expr().is_zero() || self.excision.value(j, x, xi) == 1.0 {
                continue;
            }
            let e = Excised {
                inner: a,
                excision: &self.excision,
                n: j,
            };
            for (ro, rd) in out.iter_mut().zip(e.derivatives(x, xi, order)) {
                for (o, d) in ro.iter_mut().zip(rd) {
                    *o += d;
                }
            }
        }
        out
    }

    fn value(&self, x: f64, xi: f64) -> Complex64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let w = 1.0 - self.excision.value(j, x, xi);
                if w == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    a.value(x, xi) * w
                }
            })
            .sum()
    }
}

pub fn resum(
    series: &FormalSeries,
    seq: &crate::weights::WeightSequence,
    s: f64,
    r: f64,
) -> Result<ResummedSymbol> {
    Ok(ResummedSymbol::new(series, Excision::new(seq, s, r)?))
}

/// Outcome of [`resum_auto`].
pub struct AutoResum {
    pub symbol: ResummedSymbol,
    pub residuals: Vec<SeminormReport>,
    pub tried: Vec<f64>,
}

/// Residual of the resummed symbol against its source for `N = 1..=n_check`.
pub fn resum_residuals(
    b: &ResummedSymbol,
    params: &ClassParams,
    n_check: usize,
    budget: ScanBudget,
) -> Vec<SeminormReport> {
    let terms = b.terms();
    let first: Vec<&dyn Symbol> = terms.iter().map(|t| t as &dyn Symbol).collect();
    equivalence_residual(&first, &[b as &dyn Symbol], n_check, params, budget)
}

/// The residual table is bounded by four times its `N = 1` entry.
pub fn uniformly_bounded(residuals: &[SeminormReport]) -> bool {
    let first = residuals.first().map_or(0.0, |r| r.value);
    residuals
        .iter()
        .all(|r| r.value.is_finite() && r.value <= 4.0 * first)
}

/// Doubles `R` from `2 B` until [`uniformly_bounded`] holds.
pub fn resum_auto(
    series: &FormalSeries,
    params: &ClassParams,
    s: f64,
    n_check: usize,
    budget: ScanBudget,
) -> Result<AutoResum> {
    let mut r = 2.0 * params.big_b;
    let mut tried = Vec::new();
    for _ in 0..10 {
        tried.push(r);
        let b = resum(series, &params.m_seq, s, r)?;
        let residuals = resum_residuals(&b, params, n_check, budget);
        if uniformly_bounded(&residuals) {
            return Ok(AutoResum {
                symbol: b,
                residuals,
                tried,
            });
        }
        r *= 2.0;
    }
    Err(Error::NoConvergence(format!(
        "no R in {tried:?} gives a uniformly bounded residual table"
    )))
}

/// `r_N = max_u sup |Op_{tau1}(a) u - Op_tau(b_N) u|` for `N = 1..=n_max`, where
/// `b_N` is the `N`-term truncation, resummed when an excision is given.
pub fn verify_quantization_change(
    a: &Expr,
    tau1: f64,
    tau: f64,
    n_max: usize,
    testfns: &[GridFunction],
    excision: Option<&Excision>,
) -> Result<Vec<(usize, f64)>> {
    let series = change_quantization_terms(a, tau1, tau, n_max)?;
    let sa = SymbolFn::new(a.clone());
    let lhs: Vec<GridFunction> = testfns
        .iter()
        .map(|u| op_tau_apply(&sa, tau1, u))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let part = FormalSeries::new(series.terms[..n].to_vec());
        let b: Box<dyn Symbol> = match excision {
            Some(e) => Box::new(ResummedSymbol::new(&part, e.clone())),
            None => Box::new(SymbolFn::new(Expr::add(part.terms.clone()))),
        };
        let mut r: f64 = 0.0;
        for (u, l) in testfns.iter().zip(&lhs) {
            r = r.max(op_tau_apply(b.as_ref(), tau, u)?.sup_distance(l));
        }
        out.push((n, r));
    }
    Ok(out)
}

/// `r_N = max_u sup |Op_0(a) Op_0(b) u - Op_0(c_N) u|` with `c_N` the `N`-term
/// composition expansion.
pub fn verify_composition(
    a: &Expr,
    b: &Expr,
    n_max: usize,
    testfns: &[GridFunction],
) -> Result<Vec<(usize, f64)>> {
    let series = composition_terms(a, b, n_max)?;
    let (sa, sb) = (SymbolFn::new(a.clone()), SymbolFn::new(b.clone()));
    let lhs: Vec<GridFunction> = testfns
        .iter()
        .map(|u| op_tau_apply(&sa, 0.0, &op_tau_apply(&sb, 0.0, u)?))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let c = SymbolFn::new(Expr::add(series.terms[..n].to_vec()));
        let mut r: f64 = 0.0;
        for (u, l) in testfns.iter().zip(&lhs) {
            r = r.max(op_tau_apply(&c, 0.0, u)?.sup_distance(l));
        }
        out.push((n, r));
    }
    Ok(out)
}

/// `r_N = max_{u,v} |<Op_tau(a) u, v> - <u, Op_tau(t_N) v>|` with `t_N` the
/// `N`-term transpose expansion.
pub fn verify_transpose(
    a: &Expr,
    tau: f64,
    n_max: usize,
    testfns: &[GridFunction],
) -> Result<Vec<(usize, f64)>> {
    let series = transpose_terms(a, tau, n_max)?;
    let sa = SymbolFn::new(a.clone());
    let lhs: Vec<GridFunction> = testfns
        .iter()
        .map(|u| op_tau_apply(&sa, tau, u))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let t = SymbolFn::new(Expr::add(series.terms[..n].to_vec()));
        let rhs: Vec<GridFunction> = testfns
            .iter()
            .map(|v| op_tau_apply(&t, tau, v))
            .collect::<Result<_>>()?;
        let mut r: f64 = 0.0;
        for (u, l) in testfns.iter().zip(&lhs) {
            for (v, tv) in testfns.iter().zip(&rhs) {
                r = r.max((l.pairing(v) - u.pairing(tv)).norm());
            }
        }
        out.push((n, r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{hermite_testfn, Grid};
    use crate::weights::WeightSequence;

    fn p(t: &str) -> Expr {
        Expr::parse(t).unwrap()
    }

    fn series(ts: &[&str]) -> FormalSeries {
        FormalSeries::new(ts.iter().map(|t| p(t)).collect())
    }

    #[test]
    fn change_of_quantisation_terms() {
        let a = p("x*xi");
        assert_eq!(
            change_quantization_terms(&a, 0.5, 0.5, 3).unwrap(),
            series(&["x*xi", "0", "0"])
        );
        assert_eq!(
            change_quantization_terms(&p("xi^2"), 0.0, 1.0, 3).unwrap(),
            series(&["xi^2", "0", "0"])
        );
        for tau in [0.0, 0.5, 1.0] {
            let t = change_quantization_terms(&a, 0.0, tau, 3).unwrap();
            let want = FormalSeries::new(vec![
                a.clone(),
                Expr::Const(&Cq::i() * &Cq::from_f64(tau).unwrap()),
                Expr::zero(),
            ]);
            assert_eq!(t.trimmed(), want.trimmed());
        }
        assert!(change_quantization_terms(&a, 0.0, 1.0, 0).is_err());
        assert!(change_quantization_terms(&a, 0.0, 1.0, MAX_TERMS + 1).is_err());
    }

    #[test]
    fn transposes() {
        assert_eq!(
            transpose_terms(&p("x*xi^2"), 0.5, 3).unwrap(),
            series(&["x*xi^2", "0", "0"])
        );
        assert_eq!(
            transpose_terms(&p("xi"), 0.0, 3).unwrap(),
            series(&["-xi", "0", "0"])
        );
        let t = transpose_terms(&p("x*xi"), 0.0, 3).unwrap();
        assert_eq!(t, series(&["-x*xi", "i", "0"]));
        // agrees with changing quantisation 1 -> 0 of a(x, -xi)
        let c = change_quantization_terms(&p("-x*xi"), 1.0, 0.0, 3).unwrap();
        assert_eq!(t, c);
        // involution on a polynomial
        let a = p("x^2*xi^3 + 2*x*xi - 3*x^3");
        for tau in [0.0, 0.25, 0.5] {
            let once = transpose_terms(&a, tau, 6).unwrap();
            let twice = transpose_series(&once, tau, 6).unwrap();
            assert_eq!(twice.trimmed(), FormalSeries::singleton(a.clone()));
        }
        // Weyl transpose of an even real symbol has no corrections
        let even = transpose_terms(&p("x^2*xi^2 + exp(-xi^2)"), 0.5, 4).unwrap();
        assert!(even.terms[1..].iter().all(Expr::is_zero));
    }

    #[test]
    fn compositions() {
        assert_eq!(
            composition_terms(&p("xi"), &p("x"), 3).unwrap(),
            series(&["x*xi", "-i", "0"])
        );
        assert_eq!(
            composition_terms(&p("x"), &p("xi"), 3).unwrap(),
            series(&["x*xi", "0", "0"])
        );
        assert_eq!(
            composition_terms(&p("xi^2"), &p("xi"), 2).unwrap(),
            series(&["xi^3", "0"])
        );
        let (a, b) = (p("x^2*xi + xi^3"), p("x^3 - x*xi^2"));
        assert_eq!(
            compose_series(
                &FormalSeries::singleton(a.clone()),
                &FormalSeries::singleton(b.clone()),
                4
            )
            .unwrap(),
            composition_terms(&a, &b, 4).unwrap()
        );
        let bs = series(&["x*xi^2", "x^2"]);
        assert_eq!(
            compose_series(&FormalSeries::singleton(Expr::one()), &bs, 4)
                .unwrap()
                .trimmed(),
            bs
        );
        let c = series(&["x + xi^2", "xi"]);
        let left = compose_series(
            &compose_series(&FormalSeries::singleton(a.clone()), &bs, 4).unwrap(),
            &c,
            4,
        )
        .unwrap();
        let right = compose_series(
            &FormalSeries::singleton(a),
            &compose_series(&bs, &c, 4).unwrap(),
            4,
        )
        .unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn products() {
        let a = series(&["x*xi", "x^2"]);
        let one = series(&["1", "0"]);
        assert_eq!(multiply_series(&a, &one, 3).unwrap().trimmed(), a);
        assert!(multiply_series(&a, &series(&["0"]), 3)
            .unwrap()
            .terms
            .iter()
            .all(Expr::is_zero));
        let g = series(&["exp(-x^2 - xi^2)"]);
        let sh = multiply_series_shifted(&g, &g, 1, 3).unwrap();
        assert!(sh.terms[0].is_zero() && !sh.terms[1].is_zero());
    }

    #[test]
    fn quantisation_round_trip_is_exact() {
        let a = p("x^3*xi^2 - 2*x*xi + 5");
        let there = change_quantization_terms(&a, 0.0, 0.5, 6).unwrap();
        let back = change_quantization_series(&there, 0.5, 0.0, 6).unwrap();
        assert_eq!(back.trimmed(), FormalSeries::singleton(a));
    }

    #[test]
    fn rearrangement_identity() {
        let (a, b) = (p("x^2*xi^3 + xi"), p("x^4*xi - x*xi^2"));
        for n in 1..=4 {
            assert!(leibniz_rearrangement_residual(&a, &b, n).is_zero());
        }
    }

    #[test]
    fn resummation_basics() {
        let seq = WeightSequence::gevrey(1.0, 64).unwrap();
        let a = p("exp(-x^2 - xi^2)");
        let b = resum(&FormalSeries::singleton(a.clone()), &seq, 2.0, 1.0).unwrap();
        let sa = SymbolFn::new(a);
        for (x, xi) in [(0.0, 0.0), (1.5, -2.0), (7.0, 3.0)] {
            assert_eq!(b.value(x, xi), sa.value(x, xi));
        }
        let s = series(&["1", "1", "1", "1"]);
        let b = resum(&s, &seq, 2.0, 1.0).unwrap();
        // chi_j = 1 inside 2 R m_j = 2 j and 0 beyond 3 j
        assert_eq!(b.active_terms(0.0, 0.0), 1);
        assert_eq!(b.active_terms(10.0, 0.0), 4);
        assert_eq!(b.active_terms(4.5, 0.0), 3);
    }

    #[test]
    fn polynomial_quantisation_change_is_exact() {
        let g = Grid::default();
        let u: Vec<_> = (0..4).map(|k| hermite_testfn(k, g).unwrap()).collect();
        let r = verify_quantization_change(&p("x*xi"), 0.0, 0.5, 2, &u, None).unwrap();
        assert!(r[1].1 <= 1e-7, "{r:?}");
        let r = verify_quantization_change(&p("xi^2"), 0.0, 0.5, 1, &u, None).unwrap();
        assert!(r[0].1 <= 1e-8, "{r:?}");
        let r = verify_composition(&p("xi"), &p("x"), 2, &u).unwrap();
        assert!(r[1].1 <= 1e-7, "{r:?}");
    }

    #[test]
    fn polynomial_transpose_is_exact() {
        let g = Grid::default();
        let u: Vec<_> = (0..3).map(|k| hermite_testfn(k, g).unwrap()).collect();
        for tau in [0.0, 0.25, 1.0] {
            let r = verify_transpose(&p("x*xi^2"), tau, 3, &u).unwrap();
            assert!(r[2].1 <= 1e-7, "tau {tau}: {r:?}");
        }
        let r = verify_transpose(&p("x*xi"), 0.0, 2, &u).unwrap();
        assert!(r[0].1 > 1e-3 && r[1].1 < 1e-8, "{r:?}");
    }
}

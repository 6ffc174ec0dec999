//! Grid scans estimating the weighted suprema that define the symbol classes.
//!
//! A scan is a lower estimate of the true norm: it only sees the derivative
//! orders and points of its budget. The `saturated` flag marks reports whose
//! maximum sits on the edge of the budget (or is not finite), where a larger
//! budget would likely raise the value.

use super::{Amplitude, Symbol};
use crate::error::{Error, Result};
use crate::numeric::{bracket, linspace};
use crate::par;
use crate::weights::{inclusion_exponent, WeightSequence};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct ClassParams {
    pub a: WeightSequence,
    pub b: WeightSequence,
    pub m_seq: WeightSequence,
    pub rho: f64,
    pub h: f64,
    pub m: f64,
    /// Scale `B` of the regions `Q_{B m_j}^c` for formal series.
    pub big_b: f64,
}

impl ClassParams {
    /// `A = B = M = p!^s`.
    pub fn gevrey(s: f64, rho: f64, h: f64, m: f64) -> Result<Self> {
        let seq = WeightSequence::gevrey(s, crate::weights::DEFAULT_HORIZON)?;
        Ok(ClassParams {
            a: seq.clone(),
            b: seq.clone(),
            m_seq: seq,
            rho,
            h,
            m,
            big_b: 1.0,
        })
    }

    /// Checks `0 < rho <= 1`, positive scales, and `A, B` inside `M` on the horizon.
    pub fn check(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::param(format!("rho = {} outside (0, 1]", self.rho)));
        }
        if !(self.h > 0.0 && self.m > 0.0 && self.big_b > 0.0) {
            return Err(Error::param("h, m and B must be positive"));
        }
        for (name, s) in [("A", &self.a), ("B", &self.b)] {
            let r = inclusion_exponent(s, &self.m_seq, &[1.0]);
            if !r.rows[0].holds {
                return Err(Error::param(format!("{name}_p is not contained in M_p")));
            }
        }
        Ok(())
    }

    fn ln_assoc(&self, v: f64) -> f64 {
        self.m_seq.associated_auto(self.m * v.abs()).value
    }

    /// `m_j` with the convention `m_0 = 0`.
    pub fn m_j(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else if j <= self.m_seq.horizon() {
            self.m_seq.quotient(j)
        } else {
            self.m_seq
                .ln_quotient_any(j)
                .map(f64::exp)
                .unwrap_or(f64::INFINITY)
        }
    }

    /// `(x, xi)` lies in `Q^c_{B m_j}`.
    pub fn outside_q(&self, j: usize, x: f64, xi: f64) -> bool {
        let t = self.big_b * self.m_j(j);
        bracket(&[x]) >= t || bracket(&[xi]) >= t
    }
}

/// Derivative order and symmetric grid `[-extent, extent]` with `points` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanBudget {
    pub order: usize,
    pub extent: f64,
    pub points: usize,
}

impl Default for ScanBudget {
    fn default() -> Self {
        ScanBudget {
            order: 6,
            extent: 12.0,
            points: 97,
        }
    }
}

impl ScanBudget {
    /// Budget for three-variable amplitude scans.
    pub fn amplitude() -> Self {
        ScanBudget {
            order: 4,
            extent: 12.0,
            points: 33,
        }
    }

    pub fn axis(&self) -> Vec<f64> {
        linspace(-self.extent, self.extent, self.points)
    }
}

/// Location of a scanned maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: Option<usize>,
    pub x: f64,
    pub xi: f64,
    pub y: Option<f64>,
    pub n: Option<usize>,
}

impl Witness {
    fn order(&self) -> usize {
        self.alpha + self.beta + self.gamma.unwrap_or(0)
    }

    fn radius2(&self) -> f64 {
        self.x * self.x + self.xi * self.xi + self.y.map_or(0.0, |y| y * y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormReport {
    pub value: f64,
    pub ln_value: f64,
    pub witness: Option<Witness>,
    pub budget: ScanBudget,
    pub saturated: bool,
}

#[derive(Clone, Copy)]
struct Best {
    ln: f64,
    w: Option<Witness>,
    nonfinite: bool,
}

impl Best {
    fn new() -> Self {
        Best {
            ln: f64::NEG_INFINITY,
            w: None,
            nonfinite: false,
        }
    }

    fn better(ln: f64, w: &Witness, cur: &Best) -> bool {
        match cur.w {
            None => true,
            Some(c) => {
                if ln != cur.ln {
                    return ln > cur.ln;
                }
                (w.order(), w.radius2()) < (c.order(), c.radius2())
            }
        }
    }

    fn offer(&mut self, ln: f64, w: Witness) {
        if ln.is_nan() || ln == f64::INFINITY {
            self.nonfinite = true;
            return;
        }
        if ln == f64::NEG_INFINITY {
            return;
        }
        if Self::better(ln, &w, self) {
            self.ln = ln;
            self.w = Some(w);
        }
    }

    fn merge(mut self, o: Best) -> Best {
        self.nonfinite |= o.nonfinite;
        if let Some(w) = o.w {
            if Self::better(o.ln, &w, &self) {
                self.ln = o.ln;
                self.w = Some(w);
            }
        }
        self
    }

    fn report(self, budget: ScanBudget) -> SeminormReport {
        let edge = |v: f64| v.abs() >= budget.extent;
        let saturated = self.nonfinite
            || self.w.is_some_and(|w| {
                w.alpha == budget.order
                    || w.beta == budget.order
                    || w.gamma == Some(budget.order)
                    || edge(w.x)
                    || edge(w.xi)
                    || w.y.is_some_and(edge)
            });
        let ln_value = if self.nonfinite {
            f64::INFINITY
        } else {
            self.ln
        };
        SeminormReport {
            value: ln_value.exp(),
            ln_value,
            witness: self.w,
            budget,
            saturated,
        }
    }
}

fn ln_abs(z: Complex64) -> f64 {
    let n = z.norm();
    if n.is_nan() {
        f64::NAN
    } else {
        n.ln()
    }
}

/// The `(alpha, beta)` summand of the Gamma norm at one point, in log scale.
#[allow(clippy::too_many_arguments)]
pub fn ln_gamma_term(
    p: &ClassParams,
    d: Complex64,
    alpha: usize,
    beta: usize,
    x: f64,
    xi: f64,
    extra: usize,
) -> f64 {
    let k = (alpha + beta) as f64;
    let n = extra as f64;
    ln_abs(d) + p.rho * (k + 2.0 * n) * bracket(&[x, xi]).ln()
        - p.ln_assoc(xi)
        - p.ln_assoc(x)
        - (k + 2.0 * n) * p.h.ln()
        - p.a.ln_m(alpha)
        - p.b.ln_m(beta)
        - if extra > 0 {
            p.a.ln_m(extra) + p.b.ln_m(extra)
        } else {
            0.0
        }
}

fn scan_rows<F>(budget: ScanBudget, slots: usize, row: F) -> Vec<Best>
where
    F: Fn(f64, f64, &mut [Best]) + Sync + Send,
{
    let axis = budget.axis();
    let rows = par::map(axis.len(), |i| {
        let mut best = vec![Best::new(); slots];
        for &xi in &axis {
            row(axis[i], xi, &mut best);
        }
        best
    });
    let mut out = vec![Best::new(); slots];
    for r in rows {
        for (o, b) in out.iter_mut().zip(r) {
            *o = o.merge(b);
        }
    }
    out
}

/// Scanned Gamma norm of a symbol.
pub fn gamma_seminorm(a: &dyn Symbol, p: &ClassParams, budget: ScanBudget) -> SeminormReport {
    let k = budget.order;
    let best = scan_rows(budget, 1, |x, xi, best| {
        let d = a.derivatives(x, xi, k);
        for (alpha, row) in d.iter().enumerate() {
            for (beta, v) in row.iter().enumerate() {
                let ln = ln_gamma_term(p, *v, alpha, beta, x, xi, 0);
                best[0].offer(
                    ln,
                    Witness {
                        alpha,
                        beta,
                        gamma: None,
                        x,
                        xi,
                        y: None,
                        n: None,
                    },
                );
            }
        }
    });
    best[0].report(budget)
}

/// Scanned formal-series norm; term `j` is only sampled on `Q^c_{B m_j}`.
pub fn fs_seminorm(terms: &[&dyn Symbol], p: &ClassParams, budget: ScanBudget) -> SeminormReport {
    let k = budget.order;
    let best = scan_rows(budget, 1, |x, xi, best| {
        for (j, a) in terms.iter().enumerate() {
            if !p.outside_q(j, x, xi) {
                continue;
            }
            let d = a.derivatives(x, xi, k);
            for (alpha, row) in d.iter().enumerate() {
                for (beta, v) in row.iter().enumerate() {
                    let ln = ln_gamma_term(p, *v, alpha, beta, x, xi, j);
                    best[0].offer(
                        ln,
                        Witness {
                            alpha,
                            beta,
                            gamma: None,
                            x,
                            xi,
                            y: None,
                            n: Some(j),
                        },
                    );
                }
            }
        }
    });
    best[0].report(budget)
}

/// Residuals of `sum_{j<N} (a_j - b_j)` for `N = 1..=n_max`, each on `Q^c_{B m_N}`.
pub fn equivalence_residual(
    first: &[&dyn Symbol],
    second: &[&dyn Symbol],
    n_max: usize,
    p: &ClassParams,
    budget: ScanBudget,
) -> Vec<SeminormReport> {
    let k = budget.order;
    let best = scan_rows(budget, n_max, |x, xi, best| {
        if !p.outside_q(1, x, xi) {
            return;
        }
        let zero = vec![vec![Complex64::new(0.0, 0.0); k + 1]; k + 1];
        let mut acc = zero.clone();
        for n in 1..=n_max {
            let j = n - 1;
            let da = first.get(j).map(|s| s.derivatives(x, xi, k));
            let db = second.get(j).map(|s| s.derivatives(x, xi, k));
            for a in 0..=k {
                for b in 0..=k {
                    acc[a][b] += da.as_ref().map_or(zero[a][b], |d| d[a][b])
                        - db.as_ref().map_or(zero[a][b], |d| d[a][b]);
                }
            }
            if !p.outside_q(n, x, xi) {
                // the regions shrink with N; later N see no more of this point
                break;
            }
            for (alpha, row) in acc.iter().enumerate() {
                for (beta, v) in row.iter().enumerate() {
                    let ln = ln_gamma_term(p, *v, alpha, beta, x, xi, n);
                    best[n - 1].offer(
                        ln,
                        Witness {
                            alpha,
                            beta,
                            gamma: None,
                            x,
                            xi,
                            y: None,
                            n: Some(n),
                        },
                    );
                }
            }
        }
    });
    best.into_iter().map(|b| b.report(budget)).collect()
}

/// Scanned Pi norm of an amplitude.
pub fn pi_seminorm(amp: &dyn Amplitude, p: &ClassParams, budget: ScanBudget) -> SeminormReport {
    let k = budget.order;
    let axis = budget.axis();
    let assoc: Vec<f64> = axis.iter().map(|v| p.ln_assoc(*v)).collect();
    let rows = par::map(axis.len(), |i| {
        let x = axis[i];
        let mut best = Best::new();
        for (jy, &y) in axis.iter().enumerate() {
            let ln_diag = bracket(&[x - y]).ln();
            for (jx, &xi) in axis.iter().enumerate() {
                let d = amp.derivatives(x, y, xi, k);
                let ln_br = bracket(&[x, y, xi]).ln();
                for (alpha, plane) in d.iter().enumerate() {
                    for (beta, row) in plane.iter().enumerate() {
                        for (gamma, v) in row.iter().enumerate() {
                            let n = (alpha + beta + gamma) as f64;
                            let ln = ln_abs(*v) + p.rho * n * (ln_br - ln_diag)
                                - assoc[jx]
                                - assoc[i]
                                - assoc[jy]
                                - n * p.h.ln()
                                - p.a.ln_m(alpha)
                                - p.b.ln_m(beta + gamma);
                            best.offer(
                                ln,
                                Witness {
                                    alpha,
                                    beta,
                                    gamma: Some(gamma),
                                    x,
                                    xi,
                                    y: Some(y),
                                    n: None,
                                },
                            );
                        }
                    }
                }
            }
        }
        best
    });
    rows.into_iter()
        .fold(Best::new(), Best::merge)
        .report(budget)
}

/// Scanned `sup_alpha m^alpha sup_x |D^alpha u| e^{M(m|x|)} / M_alpha` for `u(x)`.
pub fn s_class_norm(
    u: &super::Expr,
    seq: &WeightSequence,
    m: f64,
    budget: ScanBudget,
) -> SeminormReport {
    let mut tapes = Vec::with_capacity(budget.order + 1);
    let mut d = u.clone();
    for a in 0..=budget.order {
        if a > 0 {
            d = d.diff(super::Var::x());
        }
        tapes.push(d.compile());
    }
    let mut best = Best::new();
    for x in budget.axis() {
        let w = seq.associated_auto(m * x.abs()).value;
        for (alpha, t) in tapes.iter().enumerate() {
            let ln = alpha as f64 * m.ln() + ln_abs(t.eval3(x, 0.0, 0.0)) + w - seq.ln_m(alpha);
            best.offer(
                ln,
                Witness {
                    alpha,
                    beta: 0,
                    gamma: None,
                    x,
                    xi: 0.0,
                    y: None,
                    n: None,
                },
            );
        }
    }
    let mut r = best.report(budget);
    // no xi axis here; only the x edge and the order edge count
    r.saturated = best.nonfinite
        || best
            .w
            .is_some_and(|w| w.alpha == budget.order || w.x.abs() >= budget.extent);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollify::Excision;
    use crate::symbols::{AmplitudeFn, Cq, Excised, Expr, SymbolFn};

    fn sym(t: &str) -> SymbolFn {
        SymbolFn::new(Expr::parse(t).unwrap())
    }

    fn small() -> ScanBudget {
        ScanBudget {
            order: 4,
            extent: 6.0,
            points: 25,
        }
    }

    #[test]
    fn constant_symbol_has_norm_one_at_origin() {
        let p = ClassParams::gevrey(1.0, 1.0, 1.0, 1.0).unwrap();
        p.check().unwrap();
        let r = gamma_seminorm(&sym("1"), &p, ScanBudget::default());
        assert_eq!(r.value, 1.0);
        let w = r.witness.unwrap();
        assert_eq!((w.alpha, w.beta, w.x, w.xi), (0, 0, 0.0, 0.0));
        assert!(!r.saturated);
    }

    #[test]
    fn gaussian_norm_decreases_in_h() {
        let a = sym("exp(-x^2 - xi^2)");
        let mut last = f64::INFINITY;
        for h in [0.5, 1.0, 2.0] {
            let p = ClassParams::gevrey(1.0, 1.0, h, 1.0).unwrap();
            let r = gamma_seminorm(&a, &p, small());
            assert!(r.value.is_finite() && r.value < last);
            last = r.value;
        }
    }

    #[test]
    fn witness_reproduces_value() {
        let a = sym("exp(-x^2/2 - xi^2)*angle(x)");
        let p = ClassParams::gevrey(1.0, 0.5, 0.7, 1.0).unwrap();
        let r = gamma_seminorm(&a, &p, small());
        let w = r.witness.unwrap();
        let d = a.derivatives(w.x, w.xi, small().order)[w.alpha][w.beta];
        let ln = ln_gamma_term(&p, d, w.alpha, w.beta, w.x, w.xi, 0);
        assert_eq!(ln.to_bits(), r.ln_value.to_bits());
    }

    #[test]
    fn series_norms() {
        let p = ClassParams::gevrey(1.0, 1.0, 1.0, 1.0).unwrap();
        let one = sym("1");
        let zero = sym("0");
        let g = gamma_seminorm(&one, &p, small());
        let f = fs_seminorm(&[&one], &p, small());
        assert_eq!(g.value, f.value);
        let z = fs_seminorm(&[&zero, &zero], &p, small());
        assert_eq!(z.value, 0.0);
        let same = equivalence_residual(&[&one, &zero], &[&one], 3, &p, small());
        assert!(same.iter().all(|r| r.value == 0.0));
    }

    #[test]
    fn amplitude_norms() {
        let p = ClassParams::gevrey(1.0, 1.0, 1.0, 1.0).unwrap();
        let b = ScanBudget {
            order: 2,
            extent: 4.0,
            points: 9,
        };
        let one = AmplitudeFn::from_symbol(&Expr::one(), &Cq::frac(1, 2));
        assert_eq!(pi_seminorm(&one, &p, b).value, 1.0);
        let g =
            AmplitudeFn::from_symbol(&Expr::parse("exp(-x^2 - xi^2)").unwrap(), &Cq::frac(1, 2));
        assert!(pi_seminorm(&g, &p, b).value.is_finite());
        let prod = AmplitudeFn::new(Expr::parse("exp(-x^2 - xi^2)*exp(-y^2 - xi^2)").unwrap());
        assert!(pi_seminorm(&prod, &p, b).value.is_finite());
    }

    #[test]
    fn s_class_estimates() {
        let seq = WeightSequence::gevrey(1.0, 64).unwrap();
        let b = ScanBudget {
            order: 8,
            extent: 12.0,
            points: 97,
        };
        assert_eq!(s_class_norm(&Expr::zero(), &seq, 0.5, b).value, 0.0);
        let u = Expr::parse("exp(-x^2/2)").unwrap();
        let mut last = 0.0;
        for m in [0.25, 0.5, 1.0] {
            let r = s_class_norm(&u, &seq, m, b);
            assert!(r.value.is_finite() && r.value >= last);
            last = r.value;
        }
    }

    #[test]
    fn excised_gaussian_norms_decrease() {
        let seq = WeightSequence::gevrey(1.0, 64).unwrap();
        let exc = Excision::new(&seq, 2.0, 1.0).unwrap();
        let a = sym("exp(-x^2/4 - xi^2/4)");
        let p = ClassParams::gevrey(1.0, 1.0, 1.0, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for n in 1..5 {
            let e = Excised {
                inner: &a,
                excision: &exc,
                n,
            };
            let r = gamma_seminorm(&e, &p, small());
            assert!(
                r.value < last || r.value == 0.0,
                "n = {n}: {} vs {last}",
                r.value
            );
            last = r.value;
        }
    }
}

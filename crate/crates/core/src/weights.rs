//! Weight sequences `M_p`, stored as `ln M_p` on a finite horizon.
//!
//! Besides the conditions (M.1)-(M.3) and the associated function
//! `M(rho) = sup_p ln_+(rho^p / M_p)`, this module carries the helpers used
//! to compare classes: the `N_{r_p}` variant, regularization of
//! sequences in the family of nondecreasing sequences tending to infinity,
//! and finite-horizon fits for the growth bounds.

use crate::error::{Error, Result};
use crate::numeric::{ln_factorials, prefix_sums};
use std::path::Path;

pub const DEFAULT_HORIZON: usize = 64;
const MAX_AUTO_HORIZON: usize = 1 << 16;
const TOL: f64 = 1e-12;

/// How the sequence was produced; analytic kinds can be extended past the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceKind {
    /// `M_p = (p!)^s`.
    Gevrey(f64),
    /// `M_p = (p!)^2 prod_{j<=p} r_j` with `r_1 = 1`, `r_j = j^{1 - 1/(2 sqrt(ln j))}`.
    Counterexample,
    /// `A_p = (p!)^2`, the companion of [`SequenceKind::Counterexample`].
    CounterexampleBase,
    Tabulated,
}

#[derive(Debug, Clone)]
pub struct WeightSequence {
    kind: SequenceKind,
    ln_m: Vec<f64>,
}

/// Value of an associated function together with where the supremum was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assoc {
    pub value: f64,
    pub argmax: usize,
    /// The supremum sat on the last index, so the value is only a lower bound.
    pub at_horizon: bool,
}

/// `ln r_j` for the counterexample sequence.
pub fn counterexample_ln_r(j: f64) -> f64 {
    if j < 2.0 {
        0.0
    } else {
        let l = j.ln();
        (1.0 - 1.0 / (2.0 * l.sqrt())) * l
    }
}

impl WeightSequence {
    pub fn gevrey(s: f64, horizon: usize) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param(format!(
                "Gevrey index must be positive, got {s}"
            )));
        }
        check_horizon(horizon)?;
        let ln_m = ln_factorials(horizon).into_iter().map(|v| s * v).collect();
        Ok(WeightSequence {
            kind: SequenceKind::Gevrey(s),
            ln_m,
        })
    }

    pub fn counterexample(horizon: usize) -> Result<Self> {
        check_horizon(horizon)?;
        let lf = ln_factorials(horizon);
        let lr = prefix_sums((0..=horizon).map(|j| counterexample_ln_r(j as f64)));
        Ok(WeightSequence {
            kind: SequenceKind::Counterexample,
            ln_m: lf.iter().zip(&lr).map(|(f, r)| 2.0 * f + r).collect(),
        })
    }

    pub fn counterexample_base(horizon: usize) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(WeightSequence {
            kind: SequenceKind::CounterexampleBase,
            ln_m: ln_factorials(horizon)
                .into_iter()
                .map(|v| 2.0 * v)
                .collect(),
        })
    }

    /// Build from `ln M_0, ln M_1, ...`; requires `M_0 = 1`.
    pub fn from_log_values(ln_m: Vec<f64>) -> Result<Self> {
        if ln_m.len() < 2 {
            return Err(Error::InvalidSequence("need at least M_0 and M_1".into()));
        }
        if let Some(p) = ln_m.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSequence(format!("ln M_{p} is not finite")));
        }
        if ln_m[0].abs() > TOL {
            return Err(Error::InvalidSequence(format!(
                "M_0 must be 1, got exp({})",
                ln_m[0]
            )));
        }
        Ok(WeightSequence {
            kind: SequenceKind::Tabulated,
            ln_m,
        })
    }

    /// Read a one-column file of `ln M_p`; blank lines and `#` comments are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut vals = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                column: 1,
                message: format!("expected a number, got `{line}`"),
            })?;
            vals.push(v);
        }
        Self::from_log_values(vals)
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    pub fn horizon(&self) -> usize {
        self.ln_m.len() - 1
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_m
    }

    pub fn ln_m(&self, p: usize) -> f64 {
        self.ln_m[p]
    }

    /// `ln m_p = ln M_p - ln M_{p-1}` for `1 <= p <= horizon`.
    pub fn ln_quotient(&self, p: usize) -> f64 {
        self.ln_m[p] - self.ln_m[p - 1]
    }

    pub fn quotient(&self, p: usize) -> f64 {
        self.ln_quotient(p).exp()
    }

    pub fn is_extendable(&self) -> bool {
        self.kind != SequenceKind::Tabulated
    }

    /// `ln m_j` for any `j >= 1`, past the horizon when the kind allows it.
    pub fn ln_quotient_any(&self, j: usize) -> Option<f64> {
        if j >= 1 && j <= self.horizon() {
            return Some(self.ln_quotient(j));
        }
        self.ln_quotient_at(j as f64)
    }

    /// Smooth extension `t -> ln m(t)` for analytic kinds (used for tail sums).
    pub fn ln_quotient_at(&self, t: f64) -> Option<f64> {
        match self.kind {
            SequenceKind::Gevrey(s) => Some(s * t.ln()),
            SequenceKind::Counterexample => Some(2.0 * t.ln() + counterexample_ln_r(t)),
            SequenceKind::CounterexampleBase => Some(2.0 * t.ln()),
            SequenceKind::Tabulated => None,
        }
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match self.kind {
            SequenceKind::Gevrey(s) => Self::gevrey(s, horizon),
            SequenceKind::Counterexample => Self::counterexample(horizon),
            SequenceKind::CounterexampleBase => Self::counterexample_base(horizon),
            SequenceKind::Tabulated => {
                if horizon <= self.horizon() {
                    Self::from_log_values(self.ln_m[..=horizon].to_vec())
                } else {
                    Err(Error::Horizon {
                        horizon: self.horizon(),
                        what: format!("tabulated sequence cannot be extended to {horizon}"),
                    })
                }
            }
        }
    }

    /// `M(rho) = sup_{p <= horizon} ln_+(rho^p / M_p)`.
    pub fn associated(&self, rho: f64) -> Assoc {
        sup_log(rho, &self.ln_m, None)
    }

    /// Like [`Self::associated`] but grows the horizon of analytic kinds until
    /// the maximizing index is interior.
    pub fn associated_auto(&self, rho: f64) -> Assoc {
        let a = self.associated(rho);
        if !a.at_horizon || !self.is_extendable() {
            return a;
        }
        let mut h = self.horizon();
        while h < MAX_AUTO_HORIZON {
            h *= 2;
            let ext = self.with_horizon(h).expect("analytic kinds extend");
            let a = ext.associated(rho);
            if !a.at_horizon {
                return a;
            }
        }
        self.with_horizon(h)
            .expect("analytic kinds extend")
            .associated(rho)
    }

    /// A copy whose horizon covers the maximizer of `M(rho_max)`.
    pub fn covering(&self, rho_max: f64) -> Self {
        if !self.is_extendable() {
            return self.clone();
        }
        let mut s = self.clone();
        while s.associated(rho_max).at_horizon && s.horizon() < MAX_AUTO_HORIZON {
            s = s
                .with_horizon(s.horizon() * 2)
                .expect("analytic kinds extend");
        }
        s
    }

    /// `N_{r_p}(rho) = sup_p ln_+(rho^p / (M_p r_1 ... r_p))` on the common horizon.
    pub fn nrp_associated(&self, r: &RSequence, rho: f64) -> Assoc {
        let h = self.horizon();
        let lr = r.ln_prefix(h);
        sup_log(rho, &self.ln_m, Some(&lr))
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

fn check_horizon(h: usize) -> Result<()> {
    if h < 4 {
        return Err(Error::Horizon {
            horizon: h,
            what: "need at least 4 terms".into(),
        });
    }
    Ok(())
}

fn sup_log(rho: f64, ln_m: &[f64], extra: Option<&[f64]>) -> Assoc {
    if !(rho > 0.0) {
        return Assoc {
            value: 0.0,
            argmax: 0,
            at_horizon: false,
        };
    }
    let lr = rho.ln();
    let mut best = 0.0;
    let mut arg = 0;
    for (p, lm) in ln_m.iter().enumerate().skip(1) {
        let e = extra.map_or(0.0, |x| x[p]);
        let v = p as f64 * lr - lm - e;
        if v > best {
            best = v;
            arg = p;
        }
    }
    Assoc {
        value: best,
        argmax: arg,
        at_horizon: arg == ln_m.len() - 1 && arg > 0,
    }
}

/// Outcome of (M.1).
#[derive(Debug, Clone, PartialEq)]
pub struct M1Result {
    pub holds: bool,
    pub violation: Option<usize>,
}

/// Outcome of (M.2): `M_p <= c0 H^p min_q M_{p-q} M_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Result {
    pub holds: bool,
    pub h: f64,
    pub c0: f64,
    /// Index where the required constant keeps growing, when no `H` stabilizes.
    pub violation: Option<usize>,
}

/// Outcome of (M.3): `sum_{p>q} M_{p-1}/M_p <= c0 q M_q/M_{q+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct M3Result {
    pub holds: bool,
    pub c0: f64,
    /// Ratio of the last two dyadic blocks of `sum 1/m_p`; near 1 means divergence.
    pub block_ratio: f64,
    pub violation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witnesses {
    pub c0: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub horizon: usize,
    pub m1: M1Result,
    pub m2: M2Result,
    pub m3: M3Result,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn all_hold(&self) -> bool {
        self.m1.holds && self.m2.holds && self.m3.holds
    }

    /// Shared constants for (M.2) and (M.3): `c0` is the larger of the two fits.
    pub fn witnesses(&self) -> Witnesses {
        Witnesses {
            c0: self.m2.c0.max(self.m3.c0),
            h: self.m2.h,
        }
    }
}

/// Grid for `H` in the (M.2) fit.
pub fn m2_h_grid() -> Vec<f64> {
    (0..=70).map(|k| 1.0 + k as f64 / 10.0).collect()
}

/// Block ratio above which the series `sum 1/m_p` is treated as divergent.
pub const M3_BLOCK_RATIO: f64 = 0.9;

fn validate(seq: &WeightSequence) -> ValidationReport {
    let lm = &seq.ln_m;
    let p_max = seq.horizon();
    let mut warnings = Vec::new();

    let mut m1 = M1Result {
        holds: true,
        violation: None,
    };
    for p in 1..p_max {
        let lhs = 2.0 * lm[p];
        let rhs = lm[p - 1] + lm[p + 1];
        if lhs > rhs + TOL * (1.0 + lhs.abs()) {
            m1 = M1Result {
                holds: false,
                violation: Some(p),
            };
            break;
        }
    }

    // required ln c0 at index p for H = 1: max_q (ln M_p - ln M_q - ln M_{p-q})
    let split: Vec<f64> = (0..=p_max)
        .map(|p| {
            (0..=p)
                .map(|q| lm[p] - lm[q] - lm[p - q])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let half = p_max / 2;
    let mut m2: Option<M2Result> = None;
    let mut last_arg = 0;
    for h in m2_h_grid() {
        let lh = h.ln();
        let (mut full, mut arg) = (0.0f64, 0usize);
        let mut lower = 0.0f64;
        for (p, s) in split.iter().enumerate() {
            let v = s - p as f64 * lh;
            if v > full {
                full = v;
                arg = p;
            }
            if p <= half {
                lower = lower.max(v);
            }
        }
        last_arg = arg;
        if full <= lower + 1e-9 {
            let c0 = full.exp();
            let better = m2.as_ref().map_or(true, |b| c0 < b.c0 * (1.0 - 1e-12));
            if better {
                m2 = Some(M2Result {
                    holds: true,
                    h,
                    c0,
                    violation: None,
                });
            }
        }
    }
    let m2 = m2.unwrap_or_else(|| {
        let h = *m2_h_grid().last().unwrap();
        let c0 = (0..=p_max)
            .map(|p| split[p] - p as f64 * h.ln())
            .fold(0.0f64, f64::max)
            .exp();
        M2Result {
            holds: false,
            h,
            c0,
            violation: Some(last_arg),
        }
    });

    // (M.3) with t_p = M_{p-1}/M_p
    let t: Vec<f64> = (0..=p_max)
        .map(|p| {
            if p == 0 {
                0.0
            } else {
                (-seq.ln_quotient(p)).exp()
            }
        })
        .collect();
    let block = |lo: usize, hi: usize| -> f64 { t[lo + 1..=hi].iter().sum() };
    let upper = block(p_max / 2, p_max);
    let lower = block(p_max / 4, p_max / 2);
    let block_ratio = if lower > 0.0 {
        upper / lower
    } else {
        f64::INFINITY
    };
    let mut tail = vec![0.0; p_max + 2];
    for p in (1..=p_max).rev() {
        tail[p] = tail[p + 1] + t[p];
    }
    let mut c3 = 1.0f64;
    let mut c3_arg = 1;
    for q in 1..=half.max(1) {
        let req = tail[q + 1] / (q as f64 * t[q + 1]);
        if req > c3 {
            c3 = req;
            c3_arg = q;
        }
    }
    let m3_holds = block_ratio <= M3_BLOCK_RATIO;
    let m3 = M3Result {
        holds: m3_holds,
        c0: c3,
        block_ratio,
        violation: if m3_holds { None } else { Some(c3_arg) },
    };
    if !m3_holds {
        warnings.push(format!(
            "(M.3): partial sums of 1/m_p do not settle on the horizon (block ratio {block_ratio:.4})"
        ));
    }
    if !m2.holds {
        warnings.push(format!(
            "(M.2): no H <= {} gives a stable constant; growth at p = {}",
            m2.h, last_arg
        ));
    }
    ValidationReport {
        horizon: p_max,
        m1,
        m2,
        m3,
        warnings,
    }
}

/// Kinds of nondecreasing sequences `r_j -> infinity`.
#[derive(Debug, Clone, PartialEq)]
pub enum RKind {
    /// `r_j = c j^e`.
    Power { c: f64, e: f64 },
    /// The `r_j` of the counterexample.
    Counterexample,
    /// Values past the horizon are frozen at the last entry.
    Tabulated,
}

/// A nondecreasing positive sequence `r_1, r_2, ...` tending to infinity.
#[derive(Debug, Clone)]
pub struct RSequence {
    kind: RKind,
    /// `ln_r[0]` is unused and set to 0.
    ln_r: Vec<f64>,
}

impl RSequence {
    pub fn power(c: f64, e: f64, horizon: usize) -> Result<Self> {
        if !(c > 0.0) || !(e > 0.0) {
            return Err(Error::param("power sequence needs c > 0 and e > 0"));
        }
        let mut ln_r = vec![0.0];
        ln_r.extend((1..=horizon).map(|j| c.ln() + e * (j as f64).ln()));
        Ok(RSequence {
            kind: RKind::Power { c, e },
            ln_r,
        })
    }

    pub fn counterexample(horizon: usize) -> Self {
        let mut ln_r = vec![0.0];
        ln_r.extend((1..=horizon).map(|j| counterexample_ln_r(j as f64)));
        RSequence {
            kind: RKind::Counterexample,
            ln_r,
        }
    }

    /// From values `r_1, ..., r_P`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSequence("need at least two terms".into()));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSequence("terms must be positive".into()));
        }
        if let Some(j) = values.windows(2).position(|w| w[1] < w[0] * (1.0 - TOL)) {
            return Err(Error::InvalidSequence(format!(
                "sequence decreases at j = {}",
                j + 2
            )));
        }
        if values.last().unwrap() <= &values[0] {
            return Err(Error::InvalidSequence(
                "sequence is constant on the horizon, cannot tend to infinity".into(),
            ));
        }
        let mut ln_r = vec![0.0];
        ln_r.extend(values.iter().map(|v| v.ln()));
        Ok(RSequence {
            kind: RKind::Tabulated,
            ln_r,
        })
    }

    pub fn kind(&self) -> &RKind {
        &self.kind
    }

    pub fn horizon(&self) -> usize {
        self.ln_r.len() - 1
    }

    /// `ln r_j` for `j >= 1`.
    pub fn ln_r(&self, j: usize) -> f64 {
        if j <= self.horizon() {
            return self.ln_r[j];
        }
        self.ln_r_at(j as f64)
    }

    /// Smooth extension in `t`; tabulated sequences are frozen past the horizon.
    pub fn ln_r_at(&self, t: f64) -> f64 {
        match self.kind {
            RKind::Power { c, e } => c.ln() + e * t.ln(),
            RKind::Counterexample => counterexample_ln_r(t),
            RKind::Tabulated => {
                let h = self.horizon();
                if t >= h as f64 {
                    self.ln_r[h]
                } else {
                    let j = t.floor().max(1.0) as usize;
                    self.ln_r[j]
                }
            }
        }
    }

    pub fn value(&self, j: usize) -> f64 {
        self.ln_r(j).exp()
    }

    /// `ln (r_1 ... r_p)` for `p = 0..=horizon`.
    pub fn ln_prefix(&self, horizon: usize) -> Vec<f64> {
        prefix_sums((0..=horizon).map(|j| if j == 0 { 0.0 } else { self.ln_r(j) }))
    }
}

/// Result of [`regularize_rsequence`].
#[derive(Debug, Clone)]
pub struct Regularized {
    pub seq: RSequence,
    /// The product inequality was checked for all `p + q <= horizon`.
    pub verified: bool,
    pub fallback_used: bool,
}

/// Replace `(k_p)` by `(k'_p)` with `k'_p <= k_p`, still nondecreasing and unbounded, and
/// `prod_{j <= p+q} k'_j <= 2^{p+q} prod_{j<=p} k'_j prod_{j<=q} k'_j`.
///
/// Construction: `k'_j = j min_{i <= j} k_i / i`. Then `k'_j / j` is nonincreasing,
/// so `k'_{p+i} / k'_i <= (p+i)/i` and the product ratio is at most `binom(p+q, q)`.
pub fn regularize_rsequence(k: &RSequence) -> Result<Regularized> {
    let h = k.horizon();
    let candidate = match k.kind {
        RKind::Power { e, .. } if e <= 1.0 => k.clone(),
        RKind::Power { c, .. } => RSequence::power(c, 1.0, h)?,
        _ => {
            let mut best = f64::INFINITY;
            let mut ln_r = vec![0.0];
            for j in 1..=h {
                let lj = (j as f64).ln();
                best = best.min(k.ln_r(j) - lj);
                ln_r.push(lj + best);
            }
            RSequence {
                kind: RKind::Tabulated,
                ln_r,
            }
        }
    };
    if product_inequality_holds(&candidate, h) {
        return Ok(Regularized {
            seq: candidate,
            verified: true,
            fallback_used: false,
        });
    }
    // k'_p = min(k_p, k_1 p^{1/2})
    let c = k.value(1);
    let mut ln_r = vec![0.0];
    for j in 1..=h {
        ln_r.push(k.ln_r(j).min(c.ln() + 0.5 * (j as f64).ln()));
    }
    let fallback = RSequence {
        kind: RKind::Tabulated,
        ln_r,
    };
    if product_inequality_holds(&fallback, h) {
        Ok(Regularized {
            seq: fallback,
            verified: true,
            fallback_used: true,
        })
    } else {
        Err(Error::NoConvergence(
            "regularized sequence fails the product inequality".into(),
        ))
    }
}

/// Exhaustive check of the product inequality for `p + q <= horizon`.
pub fn product_inequality_holds(k: &RSequence, horizon: usize) -> bool {
    first_product_violation(k, horizon).is_none()
}

pub fn first_product_violation(k: &RSequence, horizon: usize) -> Option<(usize, usize)> {
    let pre = k.ln_prefix(horizon);
    let l2 = std::f64::consts::LN_2;
    for n in 0..=horizon {
        for p in 0..=n {
            let q = n - p;
            let lhs = pre[n];
            let rhs = n as f64 * l2 + pre[p] + pre[q];
            if lhs > rhs + TOL * (1.0 + lhs.abs()) {
                return Some((p, q));
            }
        }
    }
    None
}

/// One row of [`scaled_quotient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledQuotientRow {
    pub n: usize,
    /// `M(m m_n)`.
    pub lhs: f64,
    /// `2 (c0 m + 2) n ln H + ln c0`.
    pub rhs: f64,
    /// `N_{t_p}(m m_n)`.
    pub nt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledQuotientReport {
    pub m: f64,
    pub witnesses: Witnesses,
    pub rows: Vec<ScaledQuotientRow>,
    /// Smallest `ln c` with `N_{t_p}(m m_n) <= n ln H + ln c` for all checked `n`.
    pub fitted_ln_c: f64,
    /// `ln (c0 sup_p (mH)^p / (t_1 ... t_p))`.
    pub derived_ln_c: f64,
    pub holds: bool,
    pub warnings: Vec<String>,
}

/// Check `M(m m_n) <= 2(c0 m + 2) n ln H + ln c0` for `1 <= n <= n_max`, and fit
/// the constant in `N_{t_p}(m m_n) <= n ln H + ln c`.
pub fn scaled_quotient_check(
    seq: &WeightSequence,
    witnesses: &Witnesses,
    m: f64,
    n_max: usize,
    t: &RSequence,
) -> Result<ScaledQuotientReport> {
    if !(m > 0.0) {
        return Err(Error::param("m must be positive"));
    }
    if n_max > seq.horizon() {
        return Err(Error::Horizon {
            horizon: seq.horizon(),
            what: format!("n_max = {n_max} exceeds horizon"),
        });
    }
    let Witnesses { c0, h } = witnesses.clone();
    let lh = h.ln();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut holds = true;
    let mut fitted = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let rho = m * seq.quotient(n);
        let a = seq.associated_auto(rho);
        if a.at_horizon {
            warnings.push(format!("M(m m_{n}) attained at the horizon"));
        }
        let rhs = 2.0 * (c0 * m + 2.0) * n as f64 * lh + c0.ln();
        let nt = seq.nrp_associated(t, rho);
        if nt.at_horizon {
            warnings.push(format!("N_t(m m_{n}) attained at the horizon"));
        }
        holds &= a.value <= rhs + TOL * (1.0 + rhs.abs());
        fitted = fitted.max(nt.value - n as f64 * lh);
        rows.push(ScaledQuotientRow {
            n,
            lhs: a.value,
            rhs,
            nt: nt.value,
        });
    }
    let lt = t.ln_prefix(seq.horizon());
    let lmh = (m * h).ln();
    let sup = (0..=seq.horizon())
        .map(|p| p as f64 * lmh - lt[p])
        .fold(f64::NEG_INFINITY, f64::max);
    let derived_ln_c = c0.ln() + sup;
    holds &= fitted <= derived_ln_c + TOL * (1.0 + derived_ln_c.abs());
    Ok(ScaledQuotientReport {
        m,
        witnesses: witnesses.clone(),
        rows,
        fitted_ln_c: fitted.max(0.0),
        derived_ln_c,
        holds,
        warnings,
    })
}

/// One lambda of [`inclusion_exponent`]: is `A_p <= C L^p M_p^lambda` plausible?
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionRow {
    pub lambda: f64,
    pub holds: bool,
    pub ln_c: f64,
    pub ln_l: f64,
    /// Largest increment of `ln A_p - lambda ln M_p` on `(P/2, P]`.
    pub slope_upper: f64,
    /// Same on `(P/4, P/2]`.
    pub slope_lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    pub rows: Vec<InclusionRow>,
    /// Largest lambda on the grid where the fit diverged.
    pub lower: Option<f64>,
    /// Smallest lambda on the grid where the fit held.
    pub upper: Option<f64>,
}

/// Finite-horizon test of `A_p subset M_p^lambda` for each lambda.
///
/// With `f(p) = ln A_p - lambda ln M_p`, an inclusion needs the increments of `f`
/// bounded above. The fit is declared divergent when the largest increment on the
/// upper dyadic block exceeds the one on the block below it.
pub fn inclusion_exponent(
    a: &WeightSequence,
    m: &WeightSequence,
    lambdas: &[f64],
) -> InclusionReport {
    let h = a.horizon().min(m.horizon());
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let f: Vec<f64> = (0..=h).map(|p| a.ln_m(p) - lambda * m.ln_m(p)).collect();
        let inc = |lo: usize, hi: usize| -> f64 {
            (lo + 1..=hi)
                .map(|p| f[p] - f[p - 1])
                .fold(0.0f64, f64::max)
        };
        let slope_upper = inc(h / 2, h);
        let slope_lower = inc(h / 4, h / 2);
        let holds = slope_upper <= slope_lower + 1e-9;
        let ln_l = slope_upper;
        let ln_c = f
            .iter()
            .enumerate()
            .map(|(p, v)| v - p as f64 * ln_l)
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(InclusionRow {
            lambda,
            holds,
            ln_c,
            ln_l,
            slope_upper,
            slope_lower,
        });
    }
    let lower = rows
        .iter()
        .filter(|r| !r.holds)
        .map(|r| r.lambda)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let upper = rows
        .iter()
        .filter(|r| r.holds)
        .map(|r| r.lambda)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    InclusionReport { rows, lower, upper }
}

/// A sample of `f(rho) = inf { M_n / (l rho)^n : n >= 1, rho >= B m_n }`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfSample {
    pub rho: f64,
    pub ln_f: f64,
    pub argmin: usize,
    /// `rho < B M_1`: the index set is empty and only `n = 1` was used.
    pub boundary: bool,
    pub at_horizon: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfBoundReport {
    pub l: f64,
    pub b: f64,
    pub samples: Vec<InfSample>,
    /// Largest `m~` on the candidate grid for which `ln f(rho) + M(l m~ rho)` stays bounded.
    pub m_tilde: Option<f64>,
    pub ln_c: Option<f64>,
    /// The closed-form choice `1 / (B H^{t+1})` with `t = 2[c0] + 2`.
    pub derived_m_tilde: f64,
    pub derived_m_tilde_holds: bool,
}

/// Candidates `2^{-k/8}` for the fitted constant.
pub fn m_tilde_grid() -> Vec<f64> {
    (0..=160).map(|k| 2f64.powf(-(k as f64) / 8.0)).collect()
}

pub fn inf_sample(seq: &WeightSequence, l: f64, b: f64, rho: f64) -> InfSample {
    let lrho = (l * rho).ln();
    let mut best = f64::INFINITY;
    let mut arg = 1;
    let boundary = rho < b * seq.quotient(1);
    for n in 1..=seq.horizon() {
        if n > 1 && rho < b * seq.quotient(n) {
            break;
        }
        let v = seq.ln_m(n) - n as f64 * lrho;
        if v < best {
            best = v;
            arg = n;
        }
        if boundary {
            break;
        }
    }
    InfSample {
        rho,
        ln_f: best,
        argmin: arg,
        boundary,
        at_horizon: arg == seq.horizon(),
    }
}

fn bound_at(seq: &WeightSequence, samples: &[InfSample], scale: f64) -> (f64, f64) {
    let g: Vec<f64> = samples
        .iter()
        .map(|s| s.ln_f + seq.associated_auto(scale * s.rho).value)
        .collect();
    let full = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = g[..g.len().div_ceil(2)]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (full, half)
}

/// Fit `f(rho) <= C exp(-M(l m~ rho))` on the grid `rho >= B M_1`.
pub fn inf_bound_check(
    seq: &WeightSequence,
    witnesses: &Witnesses,
    l: f64,
    b: f64,
    rhos: &[f64],
) -> Result<InfBoundReport> {
    if !(l > 0.0 && b > 0.0) {
        return Err(Error::param("l and B must be positive"));
    }
    let samples: Vec<InfSample> = rhos.iter().map(|&r| inf_sample(seq, l, b, r)).collect();
    let active: Vec<InfSample> = samples.iter().filter(|s| !s.boundary).cloned().collect();
    if active.len() < 2 {
        return Err(Error::param(
            "need at least two grid points with rho >= B M_1",
        ));
    }
    let mut m_tilde = None;
    let mut ln_c = None;
    for cand in m_tilde_grid() {
        let (full, half) = bound_at(seq, &active, l * cand);
        if full <= half + 1e-9 {
            m_tilde = Some(cand);
            ln_c = Some(full);
            break;
        }
    }
    let t = 2.0 * witnesses.c0.floor() + 2.0;
    let derived_m_tilde = 1.0 / (b * witnesses.h.powf(t + 1.0));
    let (full, half) = bound_at(seq, &active, l * derived_m_tilde);
    Ok(InfBoundReport {
        l,
        b,
        samples,
        m_tilde,
        ln_c,
        derived_m_tilde,
        derived_m_tilde_holds: full <= half + 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSweep {
    pub reports: Vec<InfBoundReport>,
    /// One `m~` that works for every `l` in the sweep.
    pub common_m_tilde: Option<f64>,
    pub independent: bool,
}

/// Run [`inf_bound_check`] over several `l` and check a common `m~` serves them all.
pub fn inf_bound_sweep(
    seq: &WeightSequence,
    witnesses: &Witnesses,
    ls: &[f64],
    b: f64,
    rhos: &[f64],
) -> Result<InfSweep> {
    let reports = ls
        .iter()
        .map(|&l| inf_bound_check(seq, witnesses, l, b, rhos))
        .collect::<Result<Vec<_>>>()?;
    let common = reports
        .iter()
        .map(|r| r.m_tilde)
        .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)));
    let independent = match common {
        Some(mt) => reports.iter().all(|r| {
            let active: Vec<InfSample> =
                r.samples.iter().filter(|s| !s.boundary).cloned().collect();
            let (full, half) = bound_at(seq, &active, r.l * mt);
            full <= half + 1e-9
        }),
        None => false,
    };
    Ok(InfSweep {
        reports,
        common_m_tilde: common,
        independent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assoc_of_factorial_at_e() {
        let s = WeightSequence::gevrey(1.0, 64).unwrap();
        let a = s.associated(std::f64::consts::E);
        assert!((a.value - (2.0 - 2f64.ln())).abs() < 1e-14);
        assert_eq!(a.argmax, 2);
    }

    #[test]
    fn assoc_vanishes_below_m1() {
        let s = WeightSequence::gevrey(2.0, 64).unwrap();
        assert_eq!(s.associated(0.5).value, 0.0);
        assert_eq!(s.associated(0.0).value, 0.0);
    }

    #[test]
    fn horizon_flag_and_auto_extension() {
        let s = WeightSequence::gevrey(1.0, 8).unwrap();
        assert!(s.associated(50.0).at_horizon);
        let a = s.associated_auto(50.0);
        assert!(!a.at_horizon);
        assert_eq!(a.argmax, 50);
    }

    #[test]
    fn factorial_witnesses() {
        let r = WeightSequence::gevrey(1.0, 64).unwrap().validate();
        assert!(r.m1.holds);
        assert!(r.m2.holds);
        assert_eq!(r.m2.c0, 1.0);
        assert!((r.m2.h - 2.0).abs() < 1e-12);
        // sum 1/p diverges, so (M.3) cannot settle.
        assert!(!r.m3.holds);
    }

    #[test]
    fn gevrey_two_satisfies_all() {
        let r = WeightSequence::gevrey(2.0, 64).unwrap().validate();
        assert!(r.all_hold(), "{r:?}");
        assert!(r.m3.c0 > 1.0 && r.m3.c0 < 3.0);
    }

    #[test]
    fn log_concave_fails_m1() {
        let ln_m: Vec<f64> = (0..=16).map(|p| (p as f64).sqrt()).collect();
        let r = WeightSequence::from_log_values(ln_m).unwrap().validate();
        assert!(!r.m1.holds);
        assert_eq!(r.m1.violation, Some(1));
    }

    #[test]
    fn superexponential_fails_m2() {
        let ln_m: Vec<f64> = (0..=64).map(|p| (p * p) as f64).collect();
        let r = WeightSequence::from_log_values(ln_m).unwrap().validate();
        assert!(!r.m2.holds);
    }

    #[test]
    fn regularize_keeps_linear() {
        let k = RSequence::power(1.0, 1.0, 64).unwrap();
        let r = regularize_rsequence(&k).unwrap();
        for j in 1..=64 {
            assert!((r.seq.value(j) - j as f64).abs() < 1e-9);
        }
        assert!(!r.fallback_used);
    }

    #[test]
    fn regularize_tames_quadratic() {
        let vals: Vec<f64> = (1..=64).map(|j| (j * j) as f64).collect();
        let k = RSequence::from_values(&vals).unwrap();
        assert!(!product_inequality_holds(&k, 64));
        let r = regularize_rsequence(&k).unwrap();
        assert!(r.verified);
        for j in 1..=64 {
            assert!(r.seq.value(j) <= vals[j - 1] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rsequence_rejects_constant() {
        assert!(RSequence::from_values(&[2.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn load_rejects_bad_m0() {
        assert!(WeightSequence::from_log_values(vec![1.0, 2.0, 3.0]).is_err());
    }
}

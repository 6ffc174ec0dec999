//! Gevrey cutoffs: bump profiles, the dyadic partition of unity adapted to a
//! weight sequence, excision functions `chi_n`, and the off-diagonal cutoff.

use crate::error::{Error, Result};
use crate::fft::convolve2_valid;
use crate::jet::Jet;
use crate::numeric::{bracket, linspace};
use crate::weights::WeightSequence;

/// Nonincreasing profile `phi` with `phi = 1` on `t <= a` and `phi = 0` on `t >= b`,
/// glued from `exp(-u^{-1/(s-1)})`, which is Gevrey of order `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub s: f64,
    pub a: f64,
    pub b: f64,
}

impl BumpProfile {
    pub fn new(s: f64, a: f64, b: f64) -> Result<Self> {
        if !(s > 1.0) {
            return Err(Error::param(format!(
                "Gevrey order s = {s} <= 1: no compactly supported functions exist (quasianalytic)"
            )));
        }
        if !(a < b) {
            return Err(Error::param("bump needs a < b"));
        }
        Ok(BumpProfile { s, a, b })
    }

    fn sigma(&self) -> f64 {
        1.0 / (self.s - 1.0)
    }

    fn glue(&self, u: &Jet) -> Jet {
        let k = u.order();
        if u.c[0].re <= 0.0 {
            return Jet::zero(k);
        }
        let w = u.powf(-self.sigma());
        if w.c[0].re > 700.0 {
            return Jet::zero(k);
        }
        (-&w).exp()
    }

    /// Apply the profile to a jet argument.
    pub fn apply_jet(&self, t: &Jet) -> Jet {
        let k = t.order();
        let t0 = t.c[0].re;
        if t0 <= self.a {
            return Jet::constant(1.0, k);
        }
        if t0 >= self.b {
            return Jet::zero(k);
        }
        let u = t.add_const(-self.b).scale(-1.0 / (self.b - self.a));
        let one_minus = u.scale(-1.0).add_const(1.0);
        let g0 = self.glue(&u);
        let g1 = self.glue(&one_minus);
        let den = &g0 + &g1;
        g0.div(&den)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.a {
            return 1.0;
        }
        if t >= self.b {
            return 0.0;
        }
        let u = (self.b - t) / (self.b - self.a);
        let s = self.sigma();
        let g = |v: f64| if v <= 0.0 { 0.0 } else { (-v.powf(-s)).exp() };
        let g0 = g(u);
        g0 / (g0 + g(1.0 - u))
    }

    /// `phi^{(k)}(t)` for `k = 0..=order`.
    pub fn derivatives(&self, t: f64, order: usize) -> Vec<f64> {
        let j = self.apply_jet(&Jet::variable(t, order));
        (0..=order).map(|k| j.derivative(k).re).collect()
    }
}

/// Central-difference derivative of order `k` with one Richardson step.
pub fn fd_derivative(f: &dyn Fn(f64) -> f64, t: f64, k: usize, h: f64) -> f64 {
    let d = |h: f64| -> f64 {
        // k-th central difference
        let mut s = 0.0;
        let mut binom = 1.0;
        for i in 0..=k {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom * f(t + (k as f64 / 2.0 - i as f64) * h);
            binom *= (k - i) as f64 / (i + 1) as f64;
        }
        s / h.powi(k as i32)
    };
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[derive(Debug, Clone)]
pub struct GevreyFit {
    /// `max_t |phi^{(k)}(t)|`.
    pub maxima: Vec<f64>,
    pub c: f64,
    pub h: f64,
    /// Largest relative gap between jet and finite-difference derivatives, orders 1-2.
    pub fd_discrepancy: f64,
}

/// Fit `|phi^{(k)}| <= C h^k (k!)^s` for `k <= order` over a dense grid of `[a, b]`.
pub fn gevrey_bound_fit(p: &BumpProfile, order: usize, samples: usize) -> GevreyFit {
    let ts = linspace(p.a, p.b, samples.max(3));
    let mut maxima = vec![0.0f64; order + 1];
    for &t in &ts {
        for (k, v) in p.derivatives(t, order).iter().enumerate() {
            maxima[k] = maxima[k].max(v.abs());
        }
    }
    let c = maxima[0].max(1.0);
    let mut fact = 1.0f64;
    let mut h = 0.0f64;
    for (k, m) in maxima.iter().enumerate().skip(1) {
        fact *= k as f64;
        h = h.max((m / (c * fact.powf(p.s))).powf(1.0 / k as f64));
    }
    let f = |t: f64| p.value(t);
    let mut disc = 0.0f64;
    for &t in ts.iter().step_by((samples / 16).max(1)) {
        let d = p.derivatives(t, 2);
        for k in 1..=2 {
            let step = 1e-4 * (p.b - p.a) * if k == 2 { 10.0 } else { 1.0 };
            let fd = fd_derivative(&f, t, k, step);
            let scale = maxima[k].max(1e-300);
            disc = disc.max((fd - d[k]).abs() / scale);
        }
    }
    GevreyFit {
        maxima,
        c,
        h,
        fd_discrepancy: disc,
    }
}

/// Dyadic partition `psi_0 = phi(xi/(R M_1))`, `psi_n = phi(xi/(R m_{n+1})) - phi(xi/(R m_n))`,
/// where `phi` is 1 on `<xi> < sqrt 6` and 0 on `<xi> > 3`.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    seq: WeightSequence,
    r: f64,
    profile: BumpProfile,
}

impl DyadicPartition {
    pub fn new(seq: &WeightSequence, s: f64, r: f64) -> Result<Self> {
        let m1 = seq.quotient(1);
        if !(r > 1.0 + 1.0 / m1) {
            return Err(Error::param(format!(
                "R = {r} must exceed 1 + 1/M_1 = {}",
                1.0 + 1.0 / m1
            )));
        }
        Ok(DyadicPartition {
            seq: seq.clone(),
            r,
            profile: BumpProfile::new(s, 6f64.sqrt(), 3.0)?,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `phi(xi / t)` with `phi` applied to `<xi/t>`.
    fn phi_scaled(&self, xi: f64, t: f64) -> f64 {
        self.profile.value(bracket(&[xi / t]))
    }

    fn m(&self, n: usize) -> Result<f64> {
        if n > self.seq.horizon() {
            return Err(Error::Horizon {
                horizon: self.seq.horizon(),
                what: format!("partition index {n}"),
            });
        }
        Ok(self.seq.quotient(n))
    }

    pub fn psi(&self, n: usize, xi: f64) -> Result<f64> {
        let r = self.r;
        if n == 0 {
            return Ok(self.phi_scaled(xi, r * self.m(1)?));
        }
        Ok(self.phi_scaled(xi, r * self.m(n + 1)?) - self.phi_scaled(xi, r * self.m(n)?))
    }

    /// `phi(xi/(R m_{N+1}))`, the telescoped sum of `psi_0..psi_N`.
    pub fn partial_limit(&self, n: usize, xi: f64) -> Result<f64> {
        Ok(self.phi_scaled(xi, self.r * self.m(n + 1)?))
    }

    /// Open annulus `(lo, hi)` in `<xi>` that must contain `supp psi_n`.
    pub fn support_bounds(&self, n: usize) -> Result<(f64, f64)> {
        let r = self.r;
        if n == 0 {
            Ok((0.0, 3.0 * r * self.m(1)?))
        } else {
            Ok((2.0 * r * self.m(n)?, 3.0 * r * self.m(n + 1)?))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub telescoping_residual: f64,
    pub support_violations: usize,
    pub n: usize,
    pub samples: usize,
}

/// Check telescoping and support containment of `psi_0..psi_N` on a grid.
pub fn partition_check(part: &DyadicPartition, n: usize, grid: &[f64]) -> Result<PartitionReport> {
    let mut resid = 0.0f64;
    let mut viol = 0;
    for &xi in grid {
        let br = bracket(&[xi]);
        let mut sum = 0.0;
        for k in 0..=n {
            let v = part.psi(k, xi)?;
            sum += v;
            let (lo, hi) = part.support_bounds(k)?;
            if v != 0.0 && !(br > lo && br < hi) {
                viol += 1;
            }
        }
        resid = resid.max((sum - part.partial_limit(n, xi)?).abs());
    }
    Ok(PartitionReport {
        telescoping_residual: resid,
        support_violations: viol,
        n,
        samples: grid.len(),
    })
}

/// Excision family `chi_n(x, xi) = phi(<x>/(R m_n)) phi(<xi>/(R m_n))` with `phi = 1`
/// on `[0, 2]`, `phi = 0` on `[3, inf)`, and `chi_0 = 0`.
#[derive(Debug, Clone)]
pub struct Excision {
    seq: WeightSequence,
    r: f64,
    profile: BumpProfile,
}

impl Excision {
    pub fn new(seq: &WeightSequence, s: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::param("R must be positive"));
        }
        Ok(Excision {
            seq: seq.clone(),
            r,
            profile: BumpProfile::new(s, 2.0, 3.0)?,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sequence(&self) -> &WeightSequence {
        &self.seq
    }

    fn scale(&self, n: usize) -> f64 {
        let lm = self
            .seq
            .ln_quotient_any(n)
            .unwrap_or_else(|| self.seq.ln_quotient(self.seq.horizon()));
        self.r * lm.exp()
    }

    /// `chi_n = 1` for `<x>, <xi> <= 2 R m_n`.
    pub fn inner_radius(&self, n: usize) -> f64 {
        2.0 * self.scale(n)
    }

    pub fn value(&self, n: usize, x: f64, xi: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let t = self.scale(n);
        self.profile.value(bracket(&[x]) / t) * self.profile.value(bracket(&[xi]) / t)
    }

    /// `d^k/dv^k phi(<v>/t)` for `k = 0..=order`.
    fn factor(&self, t: f64, v: f64, order: usize) -> Vec<f64> {
        let br = bracket(&[v]);
        if br / t <= self.profile.a {
            let mut out = vec![0.0; order + 1];
            out[0] = 1.0;
            return out;
        }
        if br / t >= self.profile.b {
            return vec![0.0; order + 1];
        }
        let j = Jet::variable(v, order);
        let arg = (&j * &j).add_const(1.0).sqrt().scale(1.0 / t);
        let out = self.profile.apply_jet(&arg);
        (0..=order).map(|k| out.derivative(k).re).collect()
    }

    /// `d_xi^alpha d_x^beta chi_n(x, xi)` as `out[alpha][beta]`.
    pub fn derivatives(&self, n: usize, x: f64, xi: f64, order: usize) -> Vec<Vec<f64>> {
        if n == 0 {
            return vec![vec![0.0; order + 1]; order + 1];
        }
        let t = self.scale(n);
        let fx = self.factor(t, x, order);
        let fxi = self.factor(t, xi, order);
        fxi.iter()
            .map(|a| fx.iter().map(|b| a * b).collect())
            .collect()
    }
}

/// `(x, xi) in Q_t`, i.e. `<x> < t` and `<xi> < t`.
pub fn in_q(t: f64, x: f64, xi: f64) -> bool {
    bracket(&[x]) < t && bracket(&[xi]) < t
}

/// `(x, y) in Omega_r`, i.e. `|x - y| > r <x>`.
pub fn in_omega(r: f64, x: f64, y: f64) -> bool {
    (x - y).abs() > r * bracket(&[x])
}

/// `theta = 1_{Omega_{r/2}} * mu` sampled on `[-L, L)^2`, `mu` a bump of radius `r/16`.
#[derive(Debug, Clone)]
pub struct OffdiagCutoff {
    pub r: f64,
    pub n: usize,
    pub l: f64,
    /// Row-major, `values[i * n + j] = theta(x_i, y_j)`.
    pub values: Vec<f64>,
}

impl OffdiagCutoff {
    pub fn step(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.step()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

pub fn offdiag_cutoff(r: f64, n: usize, l: f64) -> Result<OffdiagCutoff> {
    if !(r > 0.0 && l > 0.0) || n < 8 {
        return Err(Error::param("need r > 0, L > 0, n >= 8"));
    }
    let dx = 2.0 * l / n as f64;
    let radius = r / 16.0;
    if dx > radius / 4.0 {
        return Err(Error::param(format!(
            "grid step {dx} does not resolve the mollifier radius {radius}; need step <= {}",
            radius / 4.0
        )));
    }
    let w = (radius / dx).ceil() as usize;
    let kw = 2 * w + 1;
    let mut kernel = vec![0.0; kw * kw];
    for i in 0..kw {
        for j in 0..kw {
            let a = (i as f64 - w as f64) * dx;
            let b = (j as f64 - w as f64) * dx;
            let q = (a * a + b * b) / (radius * radius);
            if q < 1.0 {
                kernel[i * kw + j] = (-1.0 / (1.0 - q)).exp();
            }
        }
    }
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= total);
    let ext = n + 2 * w;
    let mut ind = vec![0.0; ext * ext];
    for i in 0..ext {
        let x = -l + (i as f64 - w as f64) * dx;
        for j in 0..ext {
            let y = -l + (j as f64 - w as f64) * dx;
            if in_omega(r / 2.0, x, y) {
                ind[i * ext + j] = 1.0;
            }
        }
    }
    let mut values = convolve2_valid(&ind, ext, &kernel, w);
    // FFT round-off only; the exact values lie in [0, 1]
    values.iter_mut().for_each(|v| {
        if v.abs() < 1e-13 {
            *v = 0.0
        } else if (*v - 1.0).abs() < 1e-13 {
            *v = 1.0
        }
    });
    Ok(OffdiagCutoff { r, n, l, values })
}

#[derive(Debug, Clone)]
pub struct CutoffReport {
    /// Grid points in `Omega_{3r/4}` where `theta != 1` (beyond 1e-12).
    pub inner_violations: usize,
    /// Grid points outside `Omega_{r/4}` where `theta != 0`.
    pub outer_violations: usize,
}

pub fn cutoff_check(theta: &OffdiagCutoff) -> CutoffReport {
    let mut inner = 0;
    let mut outer = 0;
    for i in 0..theta.n {
        for j in 0..theta.n {
            let (x, y) = (theta.coord(i), theta.coord(j));
            let v = theta.at(i, j);
            if in_omega(0.75 * theta.r, x, y) && (v - 1.0).abs() > 1e-12 {
                inner += 1;
            }
            if !in_omega(0.25 * theta.r, x, y) && v.abs() > 1e-12 {
                outer += 1;
            }
        }
    }
    CutoffReport {
        inner_violations: inner,
        outer_violations: outer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasianalytic_order_rejected() {
        assert!(BumpProfile::new(1.0, 0.0, 1.0).is_err());
        assert!(BumpProfile::new(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn profile_values() {
        let p = BumpProfile::new(2.0, 1.0, 2.0).unwrap();
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(2.5), 0.0);
        assert!((p.value(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let p = BumpProfile::new(2.0, 0.0, 1.0).unwrap();
        let f = |t: f64| p.value(t);
        for t in [0.3, 0.5, 0.71] {
            let d = p.derivatives(t, 2);
            assert!((d[1] - fd_derivative(&f, t, 1, 1e-4)).abs() < 1e-8);
            assert!((d[2] - fd_derivative(&f, t, 2, 1e-3)).abs() < 1e-5);
        }
    }

    #[test]
    fn partition_requires_large_r() {
        let s = WeightSequence::gevrey(2.0, 64).unwrap();
        assert!(DyadicPartition::new(&s, 2.0, 1.5).is_err());
        assert!(DyadicPartition::new(&s, 2.0, 2.5).is_ok());
    }

    #[test]
    fn psi_vanishes_on_inner_edge() {
        let s = WeightSequence::gevrey(2.0, 64).unwrap();
        let part = DyadicPartition::new(&s, 2.0, 2.5).unwrap();
        for n in 1..6 {
            let br = 2.0 * part.r() * s.quotient(n);
            let xi = (br * br - 1.0).sqrt();
            assert_eq!(part.psi(n, xi).unwrap(), 0.0);
        }
    }

    #[test]
    fn excision_levels() {
        let s = WeightSequence::gevrey(2.0, 64).unwrap();
        let e = Excision::new(&s, 2.0, 1.0).unwrap();
        assert_eq!(e.value(0, 0.0, 0.0), 0.0);
        assert_eq!(e.value(2, 1.0, 1.0), 1.0);
        assert_eq!(e.value(2, 20.0, 0.0), 0.0);
        let d = e.derivatives(2, 1.0, 1.0, 3);
        assert_eq!(d[0][0], 1.0);
        assert_eq!(d[1][2], 0.0);
    }

    #[test]
    fn offdiag_cutoff_levels() {
        let th = offdiag_cutoff(0.5, 256, 1.0).unwrap();
        let rep = cutoff_check(&th);
        assert_eq!(rep.inner_violations, 0);
        assert_eq!(rep.outer_violations, 0);
    }

    #[test]
    fn offdiag_cutoff_resolution_error() {
        assert!(offdiag_cutoff(0.5, 64, 4.0).is_err());
    }
}

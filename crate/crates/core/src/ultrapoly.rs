//! Ultrapolynomials `P(z) = prod_{j >= q} (1 + z^2 / (l_j m_j)^2)`.
//!
//! The product is taken exactly up to a truncation `J` chosen from the working
//! radius; the remaining factors enter through the power series of
//! `sum_{j > J} ln(1 + z^2/c_j^2)`, whose coefficients `S_k = sum_{j>J} c_j^{-2k}`
//! come from an Euler-Maclaurin corrected integral.

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre_unit, Neumaier};
use crate::weights::{regularize_rsequence, RSequence, WeightSequence};
use num_complex::Complex64;

const MIN_TRUNCATION: usize = 10_000;

/// Scaling of the factors: a constant `l`, or `l_j = l k'_j`.
#[derive(Debug, Clone)]
pub enum Mode {
    Beurling { l: f64 },
    Roumieu { l: f64, k: RSequence },
}

impl Mode {
    pub fn l(&self) -> f64 {
        match self {
            Mode::Beurling { l } | Mode::Roumieu { l, .. } => *l,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ultrapolynomial {
    seq: WeightSequence,
    mode: Mode,
    q: usize,
    truncation: usize,
    radius: f64,
    /// `ln c_j` for `j = q..=J`.
    ln_c: Vec<f64>,
    /// `S_k` for `k = 1..`.
    tail_sums: Vec<f64>,
    tail_bound: f64,
}

/// Pointwise evaluation of `P`.
#[derive(Debug, Clone, Copy)]
pub struct PValue {
    pub ln_abs: f64,
    pub value: Complex64,
    /// Some factor was numerically zero.
    pub zero: bool,
}

impl Ultrapolynomial {
    /// Build `P` for `|z| <= radius`. With `Mode::Roumieu` the given sequence is
    /// regularized first.
    pub fn build(seq: &WeightSequence, mode: Mode, q: usize, radius: f64) -> Result<Self> {
        if q < 1 {
            return Err(Error::param("q must be at least 1"));
        }
        if !(radius > 0.0) {
            return Err(Error::param("working radius must be positive"));
        }
        let mode = match mode {
            Mode::Beurling { l } if l > 0.0 => Mode::Beurling { l },
            Mode::Roumieu { l, k } if l > 0.0 => Mode::Roumieu {
                l,
                k: regularize_rsequence(&k)?.seq,
            },
            _ => return Err(Error::param("l must be positive")),
        };
        if !seq.is_extendable() {
            return Err(Error::Horizon {
                horizon: seq.horizon(),
                what: "ultrapolynomial needs quotients past the horizon; use an analytic sequence"
                    .into(),
            });
        }
        let ln_cj = |t: f64| -> f64 {
            let lm = seq.ln_quotient_at(t).expect("extendable");
            let lk = match &mode {
                Mode::Beurling { .. } => 0.0,
                Mode::Roumieu { k, .. } => k.ln_r_at(t),
            };
            mode.l().ln() + lk + lm
        };
        // closed-form quotients; differences of the ln M_p table lose ~1e-13 each
        let ln_c_int = |j: usize| -> f64 {
            let lm = seq.ln_quotient_at(j as f64).expect("extendable");
            let lk = match &mode {
                Mode::Beurling { .. } => 0.0,
                Mode::Roumieu { k, .. } => k.ln_r(j),
            };
            mode.l().ln() + lk + lm
        };
        let mut truncation = MIN_TRUNCATION.max(q + 1);
        while ln_c_int(truncation + 1) < (2.0 * radius).ln() {
            truncation *= 2;
            if truncation > 1 << 26 {
                return Err(Error::param("working radius too large for the truncation"));
            }
        }
        let ln_c: Vec<f64> = (q..=truncation).map(ln_c_int).collect();
        // growth rate of ln c, used to test summability
        let a = truncation as f64 + 0.5;
        let slope = (ln_cj(2.0 * a) - ln_cj(a)) / std::f64::consts::LN_2;
        if slope <= 0.5 {
            return Err(Error::InvalidSequence(format!(
                "sum of 1/(l_j m_j)^2 diverges (growth exponent {slope:.3}); P is not entire"
            )));
        }
        let u = (2.0 * (radius.ln() - ln_c_int(truncation + 1))).exp();
        let mut tail_sums = Vec::new();
        let mut tail_bound = 0.0;
        for k in 1..=64 {
            let (s, err) = em_tail(&ln_cj, a, k);
            let term = radius.powi(2 * k as i32) * s / k as f64;
            tail_sums.push(s);
            tail_bound += radius.powi(2 * k as i32) * err / k as f64;
            if term < 1e-18 {
                // the omitted terms form a geometric-like series with ratio <= u
                tail_bound += term * u / (1.0 - u);
                break;
            }
        }
        Ok(Ultrapolynomial {
            seq: seq.clone(),
            mode,
            q,
            truncation,
            radius,
            ln_c,
            tail_sums,
            tail_bound,
        })
    }

    pub fn tail_sums_len(&self) -> usize {
        self.tail_sums.len()
    }

    pub fn sequence(&self) -> &WeightSequence {
        &self.seq
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Bound on the error in `ln |P|` from the truncated tail treatment.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Relative error bound `e^{tail_bound} - 1`.
    pub fn relative_error_bound(&self) -> f64 {
        self.tail_bound.exp_m1()
    }

    /// Smallest factor scale `c_q = l_q m_q`; the zeros are `±i c_j`.
    pub fn nearest_zero(&self) -> f64 {
        self.ln_c[0].exp()
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r > self.radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|z| = {r} outside working radius {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// `ln P(xi)` for real `xi`.
    pub fn ln_eval_real(&self, xi: f64) -> Result<f64> {
        self.check_radius(xi.abs())?;
        let x2 = xi * xi;
        let mut acc = Neumaier::default();
        for lc in &self.ln_c {
            acc.add((x2 * (-2.0 * lc).exp()).ln_1p());
        }
        let mut zk = 1.0;
        for (k, s) in self.tail_sums.iter().enumerate() {
            zk *= x2;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc.add(sign * zk * s / (k + 1) as f64);
        }
        Ok(acc.value())
    }

    pub fn eval(&self, z: Complex64) -> Result<PValue> {
        self.check_radius(z.norm())?;
        let z2 = z * z;
        let mut ln = Complex64::new(0.0, 0.0);
        let mut zero = false;
        for lc in &self.ln_c {
            let f = Complex64::new(1.0, 0.0) + z2 * (-2.0 * lc).exp();
            if f.norm() < 1e-300 {
                zero = true;
                continue;
            }
            ln += f.ln();
        }
        let mut zk = Complex64::new(1.0, 0.0);
        for (k, s) in self.tail_sums.iter().enumerate() {
            zk *= z2;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            ln += zk * (sign * s / (k + 1) as f64);
        }
        let value = if zero {
            Complex64::new(0.0, 0.0)
        } else {
            ln.exp()
        };
        Ok(PValue {
            ln_abs: if zero { f64::NEG_INFINITY } else { ln.re },
            value,
            zero,
        })
    }

    /// Smallest `|factor|` along `z` (diagnostic for the strip check).
    pub fn min_factor_modulus(&self, z: Complex64) -> f64 {
        let z2 = z * z;
        self.ln_c
            .iter()
            .map(|lc| (Complex64::new(1.0, 0.0) + z2 * (-2.0 * lc).exp()).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Taylor coefficients of `ln P` at real `x`, order `k`.
    pub fn ln_jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        self.check_radius(x.abs())?;
        let mut acc = vec![Neumaier::default(); order + 1];
        let mut p = vec![0.0; order + 1];
        for lc in &self.ln_c {
            let c2 = (2.0 * lc).exp();
            let den = c2 + x * x;
            acc[0].add((x * x / c2).ln_1p());
            // 1 + b t + d t^2 = (1 - alpha t)(1 - beta t); Newton sums give the log series.
            let b = 2.0 * x / den;
            let d = 1.0 / den;
            if order >= 1 {
                p[0] = 2.0;
                p[1] = -b;
                acc[1].add(b);
            }
            for n in 2..=order {
                p[n] = -b * p[n - 1] - d * p[n - 2];
                acc[n].add(-p[n] / n as f64);
            }
        }
        let mut out: Vec<f64> = acc.iter().map(|a| a.value()).collect();
        // tail polynomial sum_k (-1)^{k+1}/k S_k z^{2k} expanded at x
        for (k, s) in self.tail_sums.iter().enumerate() {
            let deg = 2 * (k + 1);
            let coef = if k % 2 == 0 { 1.0 } else { -1.0 } * s / (k + 1) as f64;
            let mut binom = 1.0;
            for n in 0..=order.min(deg) {
                if n > 0 {
                    binom *= (deg - n + 1) as f64 / n as f64;
                }
                out[n] += coef * binom * x.powi((deg - n) as i32);
            }
        }
        Ok(out)
    }

    /// Derivatives `(1/P)^{(a)}(x)` for `a = 0..=order`.
    pub fn reciprocal_derivatives(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        let lj = self.ln_jet(x, order)?;
        let j = crate::jet::Jet {
            c: lj.iter().map(|v| Complex64::new(-v, 0.0)).collect(),
        };
        let e = j.exp();
        Ok((0..=order).map(|a| e.derivative(a).re).collect())
    }

    /// Derivatives `P^{(a)}(x)` for `a = 0..=order`.
    pub fn derivatives(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        let lj = self.ln_jet(x, order)?;
        let j = crate::jet::Jet {
            c: lj.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        };
        let e = j.exp();
        Ok((0..=order).map(|a| e.derivative(a).re).collect())
    }
}

/// `sum_{j > a - 1/2} g(j)` for `g(t) = c(t)^{-2k}` by Euler-Maclaurin at the midpoint
/// `a`, returning the estimate and a bound for the first omitted correction.
fn em_tail(ln_c: &dyn Fn(f64) -> f64, a: f64, k: usize) -> (f64, f64) {
    let kk = 2.0 * k as f64;
    let g = |t: f64| (-kk * ln_c(t)).exp();
    // integral over [a, inf) with t = a e^w
    let nodes = gauss_legendre_unit(16);
    let mut integral = 0.0;
    let ga = g(a) * a;
    let mut w0 = 0.0;
    let width = 0.5;
    for _ in 0..4000 {
        let mut panel = 0.0;
        for (x, wt) in &nodes {
            let w = w0 + width * x;
            let t = a * w.exp();
            panel += wt * width * g(t) * t;
        }
        integral += panel;
        w0 += width;
        let t_end = a * w0.exp();
        if g(t_end) * t_end < 1e-22 * ga.max(integral) {
            break;
        }
    }
    let h = a * 0.01;
    let d1 = (g(a + h) - g(a - h)) / (2.0 * h);
    let d3 =
        (g(a + 2.0 * h) - 2.0 * g(a + h) + 2.0 * g(a - h) - g(a - 2.0 * h)) / (2.0 * h.powi(3));
    let est = integral + d1 / 24.0 - 7.0 * d3 / 5760.0;
    let err = (7.0 * d3 / 5760.0).abs() + 1e-14 * integral + (d1 / 24.0).abs() * 1e-3;
    (est, err)
}

/// Outcome of [`lower_bound_check`].
#[derive(Debug, Clone)]
pub struct LowerBoundReport {
    /// Rows `(xi, ln P(xi), ln of the bound C~ e^{M(xi/k)})`.
    pub rows: Vec<(f64, f64, f64)>,
    pub ln_c_tilde: f64,
    pub holds: bool,
    /// First grid point past which `ln P - M(xi/k)` keeps falling below its early minimum.
    pub failure_radius: Option<f64>,
}

/// Lower bound target: `e^{M(|z|/k)}` in the Beurling case or `e^{N_{k_p}(|z|)}` in the Roumieu case.
#[derive(Debug, Clone)]
pub enum LowerTarget {
    Beurling { k: f64 },
    Roumieu { k: RSequence },
}

/// Fit `|P(xi)| >= C~ e^{M(|xi|/k)}` on a real grid.
pub fn lower_bound_check(
    p: &Ultrapolynomial,
    target: &LowerTarget,
    grid: &[f64],
) -> Result<LowerBoundReport> {
    if grid.len() < 2 {
        return Err(Error::param("grid needs at least two points"));
    }
    let rmax = grid.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let seq = match target {
        LowerTarget::Beurling { k } => {
            if !(*k > 0.0) {
                return Err(Error::param("k must be positive"));
            }
            p.seq.covering(rmax / k)
        }
        LowerTarget::Roumieu { .. } => p.seq.covering(rmax),
    };
    let mut g = Vec::with_capacity(grid.len());
    let mut ln_p = Vec::with_capacity(grid.len());
    let mut ln_target = Vec::with_capacity(grid.len());
    for &xi in grid {
        let lp = p.ln_eval_real(xi)?;
        let lt = match target {
            LowerTarget::Beurling { k } => seq.associated(xi.abs() / k).value,
            LowerTarget::Roumieu { k } => seq.nrp_associated(k, xi.abs()).value,
        };
        ln_p.push(lp);
        ln_target.push(lt);
        g.push(lp - lt);
    }
    let half = grid.len().div_ceil(2);
    let min_lower = g[..half].iter().cloned().fold(f64::INFINITY, f64::min);
    let min_all = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let failure = (half..grid.len()).find(|&i| g[i] < min_lower - 1e-9);
    let ln_c_tilde = min_all;
    let rows = grid
        .iter()
        .zip(ln_p.iter().zip(&ln_target))
        .map(|(&x, (&lp, &lt))| (x, lp, ln_c_tilde + lt))
        .collect();
    Ok(LowerBoundReport {
        rows,
        ln_c_tilde,
        holds: failure.is_none(),
        failure_radius: failure.map(|i| grid[i]),
    })
}

#[derive(Debug, Clone)]
pub struct DerivativeReport {
    /// `max_x |(1/P)^{(a)}(x)| e^{M(|x|/k)} / a!` for each order `a`.
    pub scaled_max: Vec<f64>,
    pub c: f64,
    pub r: f64,
    /// Distance from the real axis to the nearest zero of `P`.
    pub zero_distance: f64,
    pub holds: bool,
}

/// Fit `|(1/P)^{(a)}(x)| <= C a! r^{-a} e^{-M(|x|/k)}` for `a <= order` on the grid.
pub fn reciprocal_derivative_check(
    p: &Ultrapolynomial,
    k: f64,
    order: usize,
    grid: &[f64],
) -> Result<DerivativeReport> {
    let rmax = grid.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let seq = p.seq.covering(rmax / k);
    let mut scaled = vec![0.0f64; order + 1];
    for &x in grid {
        let d = p.reciprocal_derivatives(x, order)?;
        let w = seq.associated(x.abs() / k).value;
        let mut fact = 1.0;
        for (a, v) in d.iter().enumerate() {
            if a > 1 {
                fact *= a as f64;
            }
            let s = v.abs() * w.exp() / fact;
            scaled[a] = scaled[a].max(s);
        }
    }
    let c = scaled[0];
    let r = (1..=order)
        .map(|a| (c / scaled[a]).powf(1.0 / a as f64))
        .fold(f64::INFINITY, f64::min);
    let holds = c.is_finite() && c > 0.0 && r.is_finite() && r > 0.0;
    Ok(DerivativeReport {
        scaled_max: scaled,
        c,
        r,
        zero_distance: p.nearest_zero(),
        holds,
    })
}

#[derive(Debug, Clone)]
pub struct StripReport {
    pub c: f64,
    /// `l_q m_q > c`.
    pub zero_free: bool,
    /// Smallest `|P(xi + i c/2)|` on the grid.
    pub min_modulus: f64,
    /// Smallest factor modulus and its lower bound `((c_q - c/2)/c_q)^2`.
    pub min_factor: f64,
    pub factor_bound: f64,
}

pub fn strip_check(p: &Ultrapolynomial, c: f64, grid: &[f64]) -> Result<StripReport> {
    let cq = p.nearest_zero();
    let mut min_modulus = f64::INFINITY;
    let mut min_factor = f64::INFINITY;
    for &xi in grid {
        let z = Complex64::new(xi, c / 2.0);
        let v = p.eval(z)?;
        min_modulus = min_modulus.min(v.ln_abs.exp());
        min_factor = min_factor.min(p.min_factor_modulus(z));
    }
    let factor_bound = if cq > c / 2.0 {
        ((cq - c / 2.0) / cq).powi(2)
    } else {
        0.0
    };
    Ok(StripReport {
        c,
        zero_free: cq > c,
        min_modulus,
        min_factor,
        factor_bound,
    })
}

/// Target class for [`choose_parameters`].
#[derive(Debug, Clone)]
pub enum Target {
    Beurling { k: f64 },
    Roumieu { k: RSequence },
}

#[derive(Debug, Clone)]
pub struct Chosen {
    pub l: f64,
    pub q: usize,
    pub poly: Ultrapolynomial,
    pub lower: LowerBoundReport,
}

/// Search `l = 1, 1/2, 1/4, ...`; for each `l` take the smallest `q` with `l m_q > c`,
/// and accept the first pair whose lower bound fit holds on `grid`.
pub fn choose_parameters(
    seq: &WeightSequence,
    target: &Target,
    strip: f64,
    grid: &[f64],
) -> Result<Chosen> {
    let rmax = grid.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    // room for strip checks at xi + i c / 2
    let radius = rmax.hypot(strip).max(1.0);
    let mut l = 1.0;
    for _ in 0..24 {
        let mut q = 1;
        let scale = |q: usize| -> f64 {
            let lk = match target {
                Target::Beurling { .. } => 0.0,
                Target::Roumieu { k } => regularize_rsequence(k)
                    .map(|r| r.seq.ln_r(q))
                    .unwrap_or(0.0),
            };
            l * (lk + seq.ln_quotient_any(q).unwrap_or(f64::INFINITY)).exp()
        };
        while scale(q) <= strip {
            q += 1;
            if q > 1 << 20 {
                return Err(Error::param("strip too wide"));
            }
        }
        let (mode, lt) = match target {
            Target::Beurling { k } => (Mode::Beurling { l }, LowerTarget::Beurling { k: *k }),
            Target::Roumieu { k } => (
                Mode::Roumieu { l, k: k.clone() },
                LowerTarget::Roumieu { k: k.clone() },
            ),
        };
        let poly = Ultrapolynomial::build(seq, mode, q, radius)?;
        let lower = lower_bound_check(&poly, &lt, grid)?;
        if lower.holds {
            return Ok(Chosen { l, q, poly, lower });
        }
        l /= 2.0;
    }
    Err(Error::NoConvergence("no (l, q) found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinhc(x: f64) -> f64 {
        if x == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * x).sinh() / (std::f64::consts::PI * x)
        }
    }

    #[test]
    fn tail_sum_matches_direct_summation() {
        // sum_{j > 100} j^-2 and j^-4, summed directly from the far end
        let big = 2_000_000u64;
        for k in [1usize, 2] {
            let mut direct = if k == 1 {
                1.0 / (big as f64 + 0.5)
            } else {
                0.0
            };
            for j in (101..=big).rev() {
                direct += (j as f64).powi(-2 * k as i32);
            }
            let (est, err) = em_tail(&|t: f64| t.ln(), 100.5, k);
            assert!(
                (est - direct).abs() <= err.max(1e-15 * direct),
                "k={k}: {est} {direct}"
            );
        }
    }

    fn p1() -> Ultrapolynomial {
        let s = WeightSequence::gevrey(1.0, 64).unwrap();
        Ultrapolynomial::build(&s, Mode::Beurling { l: 1.0 }, 1, 20.0).unwrap()
    }

    #[test]
    fn matches_sinh_product() {
        let p = p1();
        for x in [0.0, 0.5, 2.0, 7.3, 20.0] {
            let v = p.ln_eval_real(x).unwrap().exp();
            assert!((v / sinhc(x) - 1.0).abs() < 1e-9, "{x}: {v} {}", sinhc(x));
        }
        assert!(p.tail_bound() < 1e-10);
    }

    #[test]
    fn complex_eval_agrees_with_real() {
        let p = p1();
        let a = p.eval(Complex64::new(3.0, 0.0)).unwrap();
        assert!((a.ln_abs - p.ln_eval_real(3.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn derivative_jet_matches_closed_form() {
        let p = p1();
        let x: f64 = 1.3;
        let d = p.derivatives(x, 1).unwrap();
        let pi = std::f64::consts::PI;
        let exact = (pi * x * (pi * x).cosh() - (pi * x).sinh()) / (pi * x * x);
        assert!((d[1] / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radius_enforced() {
        assert!(p1().ln_eval_real(25.0).is_err());
    }

    #[test]
    fn strip_zero_free_iff_scale_exceeds_c() {
        let s = WeightSequence::gevrey(1.0, 64).unwrap();
        let p = Ultrapolynomial::build(&s, Mode::Beurling { l: 1.0 }, 2, 12.0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let r = strip_check(&p, 1.0, &grid).unwrap();
        assert!(r.zero_free);
        assert!(r.min_factor >= r.factor_bound * (1.0 - 1e-12));
        assert!(!strip_check(&p, 2.5, &grid).unwrap().zero_free);
    }
}

//! Discretised tau-quantisation on a uniform periodic grid.
//!
//! Fourier convention: `(F f)(xi) = int e^{-i x xi} f(x) dx`. Grids cover
//! `[-L, L)` with `N` points; the dual grid has spacing `pi / L`.

use crate::error::{Error, Result};
use crate::mollify::in_omega;
use crate::par;
use crate::symbols::{Amplitude, Symbol};
use crate::weights::WeightSequence;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Samples must be below this at the domain boundary.
pub const DECAY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    l: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { n: 256, l: 12.0 }
    }
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::param(format!(
                "grid size {n} is not a power of two >= 4"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param(format!("half-width {l} must be positive")));
        }
        Ok(Grid { n, l })
    }

    /// Parse `N,L`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (a, b) = spec
            .split_once(',')
            .ok_or_else(|| Error::param(format!("grid `{spec}` is not `N,L`")))?;
        let n = a
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("bad N in `{spec}`")))?;
        let l = b
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("bad L in `{spec}`")))?;
        Self::new(n, l)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.l
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.dx()
    }

    pub fn xi(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dxi()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.xi(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Position,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub space: Space,
}

impl GridFunction {
    /// Position samples; fails unless the samples have decayed at the boundary.
    pub fn position(grid: Grid, values: Vec<C64>) -> Result<Self> {
        let f = Self::unchecked(grid, values, Space::Position);
        f.check_decay()?;
        Ok(f)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::position(grid, grid.xs().into_iter().map(f).collect())
    }

    pub fn unchecked(grid: Grid, values: Vec<C64>, space: Space) -> Self {
        assert_eq!(values.len(), grid.n, "sample count must match the grid");
        GridFunction {
            grid,
            values,
            space,
        }
    }

    pub fn check_decay(&self) -> Result<()> {
        let edge = self.values[0]
            .norm()
            .max(self.values[self.grid.n - 1].norm());
        if edge > DECAY_TOLERANCE {
            return Err(Error::Domain(format!(
                "samples reach {edge:.3e} at the boundary; the grid truncates the function"
            )));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.step() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    fn step(&self) -> f64 {
        match self.space {
            Space::Position => self.grid.dx(),
            Space::Frequency => self.grid.dxi(),
        }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Bilinear pairing `int f g` by the trapezoid rule.
    pub fn pairing(&self, other: &GridFunction) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<C64>()
            * self.step()
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> GridFunction {
        let xs = match self.space {
            Space::Position => self.grid.xs(),
            Space::Frequency => self.grid.xis(),
        };
        let values = xs
            .iter()
            .zip(&self.values)
            .map(|(x, v)| f(*x, *v))
            .collect();
        GridFunction::unchecked(self.grid, values, self.space)
    }

    pub fn to_tsv(&self) -> String {
        let xs = match self.space {
            Space::Position => self.grid.xs(),
            Space::Frequency => self.grid.xis(),
        };
        let mut s = String::new();
        for (x, v) in xs.iter().zip(&self.values) {
            let _ = writeln!(s, "{x:e}\t{:e}\t{:e}", v.re, v.im);
        }
        s
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn fourier(u: &GridFunction) -> Result<GridFunction> {
    if u.space != Space::Position {
        return Err(Error::param("fourier expects position samples"));
    }
    u.check_decay()?;
    let g = u.grid;
    let n = g.n;
    let mut buf: Vec<C64> = u
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v * sign(j))
        .collect();
    crate::fft::fft(&mut buf, false);
    let values = buf
        .iter()
        .enumerate()
        .map(|(k, v)| v * (g.dx() * sign(k + n / 2)))
        .collect();
    Ok(GridFunction::unchecked(g, values, Space::Frequency))
}

pub fn inverse_fourier(f: &GridFunction) -> Result<GridFunction> {
    if f.space != Space::Frequency {
        return Err(Error::param("inverse_fourier expects frequency samples"));
    }
    let g = f.grid;
    let n = g.n;
    let mut buf: Vec<C64> = f
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * sign(k + n / 2))
        .collect();
    crate::fft::fft(&mut buf, true);
    let scale = 1.0 / (n as f64 * g.dx());
    let values = buf
        .iter()
        .enumerate()
        .map(|(j, v)| v * (scale * sign(j)))
        .collect();
    Ok(GridFunction::unchecked(g, values, Space::Position))
}

/// L2-normalised Hermite function `h_k`.
pub fn hermite_testfn(k: usize, grid: Grid) -> Result<GridFunction> {
    let values = grid
        .xs()
        .into_iter()
        .map(|x| C64::new(hermite_value(k, x), 0.0))
        .collect();
    GridFunction::position(grid, values).map_err(|_| {
        Error::Domain(format!(
            "h_{k} has not decayed at |x| = {}; use a wider grid",
            grid.l()
        ))
    })
}

/// `h_k(x)` by the three-term recurrence.
pub fn hermite_value(k: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-x * x / 2.0).exp();
    for j in 0..k {
        let next =
            (2.0 / (j + 1) as f64).sqrt() * x * cur - (j as f64 / (j + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Sampled kernel `K(x_i, y_j)`, row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl Kernel {
    pub fn zeros(grid: Grid) -> Self {
        Kernel {
            grid,
            values: vec![ZERO; grid.n * grid.n],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.grid.n + j]
    }

    pub fn sup_distance(&self, other: &Kernel) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `dy * sum_j K(x_i, y_j) u(y_j)`.
    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        let n = self.grid.n;
        let dx = self.grid.dx();
        let values = par::map(n, |i| {
            let row = &self.values[i * n..(i + 1) * n];
            row.iter().zip(&u.values).map(|(k, v)| k * v).sum::<C64>() * dx
        });
        GridFunction::unchecked(self.grid, values, Space::Position)
    }

    /// Lines `x, y, Re K, Im K`.
    pub fn to_tsv(&self) -> String {
        let g = self.grid;
        let mut s = String::with_capacity(g.n * g.n * 48);
        for i in 0..g.n {
            for j in 0..g.n {
                let v = self.at(i, j);
                let _ = writeln!(s, "{:e}\t{:e}\t{:e}\t{:e}", g.x(i), g.x(j), v.re, v.im);
            }
        }
        s
    }
}

/// `tau ~ p / q` with `q <= 64`, if exact to rounding.
pub fn rational_tau(tau: f64) -> Option<(i64, i64)> {
    for q in 1..=64i64 {
        let p = (tau * q as f64).round();
        if (tau * q as f64 - p).abs() < 1e-12 * q as f64 {
            return Some((p as i64, q));
        }
    }
    None
}

/// `(1/2pi) int e^{i t xi} a(x', xi) dxi` on the doubled lattice `t_m = (m - N) dx`.
struct RowTransform {
    grid: Grid,
    plan: Arc<dyn Fft<f64>>,
}

impl RowTransform {
    fn new(grid: Grid) -> Self {
        let plan = FftPlanner::new().plan_fft_inverse(2 * grid.n);
        RowTransform { grid, plan }
    }

    fn row(&self, a: &dyn Symbol, xp: f64) -> Vec<C64> {
        let n = self.grid.n;
        let dxi = PI / (2.0 * self.grid.l);
        let mut buf: Vec<C64> = (0..2 * n)
            .map(|k| a.value(xp, (k as f64 - n as f64) * dxi) * sign(k))
            .collect();
        self.plan.process(&mut buf);
        let scale = dxi / (2.0 * PI);
        buf.iter()
            .enumerate()
            .map(|(m, v)| v * (scale * sign(m + n)))
            .collect()
    }
}

/// Kernel of `Op_tau(a)`.
///
/// For rational `tau = p/q` each row is transformed at the exact base point
/// `(1 - tau) x + tau y`; other `tau` interpolate linearly between base points
/// on a lattice of spacing `dx / 64`.
pub fn kernel_from_symbol(a: &dyn Symbol, tau: f64, grid: Grid) -> Result<Kernel> {
    if !tau.is_finite() {
        return Err(Error::param("tau must be finite"));
    }
    let n = grid.n;
    let rt = RowTransform::new(grid);
    let mut k = Kernel::zeros(grid);
    if a.x_independent() {
        let row = rt.row(a, 0.0);
        for i in 0..n {
            for j in 0..n {
                k.values[i * n + j] = row[i + n - j];
            }
        }
        return Ok(k);
    }
    let (p, q, exact) = match rational_tau(tau) {
        Some((p, q)) => (p, q, true),
        None => (0, 64, false),
    };
    // base point index s: x' = -L + s dx / q
    let key = |i: usize, j: usize| -> (i64, f64) {
        if exact {
            (q * i as i64 + p * (j as i64 - i as i64), 0.0)
        } else {
            let v = q as f64 * (i as f64 + tau * (j as f64 - i as f64));
            let s = v.floor();
            (s as i64, v - s)
        }
    };
    let mut ids: Vec<i64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (s, frac) = key(i, j);
            ids.push(s);
            if frac > 0.0 {
                ids.push(s + 1);
            }
        }
    }
    ids.sort_unstable();
    ids.dedup();
    let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(r, s)| (*s, r)).collect();
    let dx = grid.dx();
    let rows = par::map(ids.len(), |r| {
        rt.row(a, -grid.l + ids[r] as f64 * dx / q as f64)
    });
    for i in 0..n {
        for j in 0..n {
            let (s, frac) = key(i, j);
            let m = i + n - j;
            let lo = rows[index[&s]][m];
            k.values[i * n + j] = if frac > 0.0 {
                lo * (1.0 - frac) + rows[index[&(s + 1)]][m] * frac
            } else {
                lo
            };
        }
    }
    Ok(k)
}

/// Symbol samples `a(x_i, xi_k)` on the grid and its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSymbol {
    pub grid: Grid,
    pub values: Vec<C64>,
    /// Samples with `|xi| >= band` are aliases and excluded from comparisons.
    pub band: f64,
}

impl GridSymbol {
    pub fn at(&self, i: usize, k: usize) -> C64 {
        self.values[i * self.grid.n + k]
    }

    pub fn sample(a: &dyn Symbol, grid: Grid) -> Self {
        let n = grid.n;
        let rows = par::map(n, |i| {
            (0..n)
                .map(|k| a.value(grid.x(i), grid.xi(k)))
                .collect::<Vec<_>>()
        });
        GridSymbol {
            grid,
            values: rows.concat(),
            band: f64::INFINITY,
        }
    }

    /// Sup distance over the frequencies both samples resolve.
    pub fn sup_distance(&self, other: &GridSymbol) -> f64 {
        let band = self.band.min(other.band);
        let n = self.grid.n;
        let mut out: f64 = 0.0;
        for k in 0..n {
            if self.grid.xi(k).abs() >= band {
                continue;
            }
            for i in 0..n {
                out = out.max((self.at(i, k) - other.at(i, k)).norm());
            }
        }
        out
    }
}

/// `a(x, xi) = int e^{-i y xi} K(x + tau y, x - (1 - tau) y) dy`.
///
/// Rational `tau = p/q` samples `y` on the lattice of spacing `q dx`, where
/// both arguments are grid points, so only `|xi| < pi / (q dx)` is resolved;
/// other `tau` interpolate `K` bilinearly.
pub fn symbol_from_kernel(k: &Kernel, tau: f64) -> Result<GridSymbol> {
    let grid = k.grid;
    let n = grid.n as i64;
    let dx = grid.dx();
    let roots: Vec<C64> = (0..n)
        .map(|r| C64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64))
        .collect();
    let rat = rational_tau(tau);
    let rows = par::map(grid.n, |i| {
        let i = i as i64;
        let mut samples: Vec<(i64, C64)> = Vec::new();
        let mut step = dx;
        let mut phase_mult = 1;
        if let Some((p, q)) = rat {
            step = q as f64 * dx;
            phase_mult = q;
            for m in -n..=n {
                let (a, b) = (i + p * m, i - (q - p) * m);
                if (0..n).contains(&a) && (0..n).contains(&b) {
                    samples.push((m, k.at(a as usize, b as usize)));
                }
            }
        } else {
            for m in -n..=n {
                let (a, b) = (i as f64 + tau * m as f64, i as f64 - (1.0 - tau) * m as f64);
                if let Some(v) = bilinear(k, a, b) {
                    samples.push((m, v));
                }
            }
        }
        (0..n)
            .map(|kk| {
                // e^{-i y_m xi_k} with y_m xi_k = 2 pi m q (k - N/2) / N
                let c = kk - n / 2;
                samples
                    .iter()
                    .map(|(m, v)| v * roots[(m * phase_mult * c).rem_euclid(n) as usize])
                    .sum::<C64>()
                    * step
            })
            .collect::<Vec<_>>()
    });
    let band = match rat {
        Some((_, q)) if q > 1 => PI / (q as f64 * dx),
        _ => f64::INFINITY,
    };
    Ok(GridSymbol {
        grid,
        values: rows.concat(),
        band,
    })
}

fn bilinear(k: &Kernel, a: f64, b: f64) -> Option<C64> {
    let n = k.grid.n;
    if a < 0.0 || b < 0.0 || a > (n - 1) as f64 || b > (n - 1) as f64 {
        return None;
    }
    let (ia, ib) = (
        (a.floor() as usize).min(n - 2),
        (b.floor() as usize).min(n - 2),
    );
    let (fa, fb) = (a - ia as f64, b - ib as f64);
    Some(
        k.at(ia, ib) * ((1.0 - fa) * (1.0 - fb))
            + k.at(ia + 1, ib) * (fa * (1.0 - fb))
            + k.at(ia, ib + 1) * ((1.0 - fa) * fb)
            + k.at(ia + 1, ib + 1) * (fa * fb),
    )
}

/// `Op_tau(a) u` through the kernel.
pub fn op_tau_apply(a: &dyn Symbol, tau: f64, u: &GridFunction) -> Result<GridFunction> {
    if u.space != Space::Position {
        return Err(Error::param("operators act on position samples"));
    }
    Ok(kernel_from_symbol(a, tau, u.grid)?.apply(u))
}

/// `Op_0(a) u = (2 pi)^{-1} int e^{i x xi} a(x, xi) u^(xi) dxi` on the dual grid.
pub fn op0_spectral(a: &dyn Symbol, u: &GridFunction) -> Result<GridFunction> {
    let uh = fourier(u)?;
    let g = u.grid;
    let n = g.n;
    let scale = g.dxi() / (2.0 * PI);
    let roots: Vec<C64> = (0..n)
        .map(|r| C64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64))
        .collect();
    let values = par::map(n, |i| {
        let x = g.x(i);
        let mut s = ZERO;
        for k in 0..n {
            // e^{i x_i xi_k} = (-1)^{k - N/2} e^{2 pi i i (k - N/2) / N}
            let c = k as i64 - (n / 2) as i64;
            let ph = roots[(i as i64 * c).rem_euclid(n as i64) as usize] * sign(k + n / 2);
            s += ph * a.value(x, g.xi(k)) * uh.values[k];
        }
        s * scale
    });
    Ok(GridFunction::unchecked(g, values, Space::Position))
}

pub fn gaussian_mollifier(t: f64) -> f64 {
    (-t * t).exp()
}

/// Values of the regularised oscillatory integral for each `delta`.
#[derive(Debug, Clone)]
pub struct AmplitudeRun {
    pub deltas: Vec<f64>,
    pub values: Vec<GridFunction>,
    /// `sup |I_{k+1} - I_k|`.
    pub cauchy: Vec<f64>,
    /// Richardson extrapolation in `delta^2` to `delta = 0`.
    pub limit: GridFunction,
}

impl AmplitudeRun {
    pub fn smallest(&self) -> &GridFunction {
        self.values.last().expect("at least two deltas")
    }

    pub fn cauchy_strictly_decreasing(&self) -> bool {
        self.cauchy.windows(2).all(|w| w[1] < w[0])
    }
}

/// `I_{chi,delta}(x) = (2 pi)^{-1} iint e^{i(x-y)xi} a(x,y,xi) chi(delta xi) u(y) dy dxi`,
/// inner `y` sum first, then the trapezoid sum over the dual grid.
pub fn amplitude_apply(
    amp: &dyn Amplitude,
    u: &GridFunction,
    chi: &(dyn Fn(f64) -> f64 + Sync),
    deltas: &[f64],
) -> Result<AmplitudeRun> {
    if (chi(0.0) - 1.0).abs() > 1e-12 {
        return Err(Error::param(format!(
            "mollifier needs chi(0) = 1, got {}",
            chi(0.0)
        )));
    }
    if deltas.len() < 2
        || deltas.windows(2).any(|w| !(w[1] < w[0]))
        || deltas[deltas.len() - 1] <= 0.0
    {
        return Err(Error::param(
            "deltas must be positive and strictly decreasing, at least two",
        ));
    }
    let g = u.grid;
    let n = g.n;
    let dx = g.dx();
    let roots: Vec<C64> = (0..n)
        .map(|r| C64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64))
        .collect();
    // e^{i x_i xi_k} as a lattice phase
    let phase = |i: usize, k: usize| {
        let c = k as i64 - (n / 2) as i64;
        roots[(i as i64 * c).rem_euclid(n as i64) as usize] * sign(k + n / 2)
    };
    let inner: Vec<Vec<C64>> = par::map(n, |i| {
        let x = g.x(i);
        (0..n)
            .map(|k| {
                let xi = g.xi(k);
                let mut s = ZERO;
                for (j, uj) in u.values.iter().enumerate() {
                    if *uj == ZERO {
                        continue;
                    }
                    s += phase(j, k).conj() * amp.value(x, g.x(j), xi) * uj;
                }
                s * dx
            })
            .collect()
    });
    let scale = g.dxi() / (2.0 * PI);
    let values: Vec<GridFunction> = deltas
        .iter()
        .map(|d| {
            let w: Vec<f64> = (0..n).map(|k| chi(d * g.xi(k))).collect();
            let vals = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|k| phase(i, k) * w[k] * inner[i][k])
                        .sum::<C64>()
                        * scale
                })
                .collect();
            GridFunction::unchecked(g, vals, Space::Position)
        })
        .collect();
    let cauchy: Vec<f64> = values
        .windows(2)
        .map(|w| w[0].sup_distance(&w[1]))
        .collect();
    let limit = richardson(deltas, &values);
    Ok(AmplitudeRun {
        deltas: deltas.to_vec(),
        values,
        cauchy,
        limit,
    })
}

/// Neville extrapolation to `delta = 0` in the variable `delta^2`.
fn richardson(deltas: &[f64], values: &[GridFunction]) -> GridFunction {
    let t: Vec<f64> = deltas.iter().map(|d| d * d).collect();
    let mut table: Vec<Vec<C64>> = values.iter().map(|v| v.values.clone()).collect();
    let k = t.len();
    for level in 1..k {
        for r in 0..k - level {
            let (t0, t1) = (t[r], t[r + level]);
            let next: Vec<C64> = table[r]
                .iter()
                .zip(&table[r + 1])
                .map(|(a, b)| (b * t0 - a * t1) / (t0 - t1))
                .collect();
            table[r] = next;
        }
    }
    GridFunction::unchecked(values[0].grid, table.swap_remove(0), Space::Position)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffdiagFit {
    pub h: f64,
    pub ln_c: f64,
    /// The bound is not driven by the outermost quarter of the sample radius.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffdiagReport {
    pub r: f64,
    pub points: usize,
    pub max_abs: f64,
    /// Values at or below this are treated as numerical ringing.
    pub floor: f64,
    pub below_floor: usize,
    /// Every sample in `Omega_r` sits at the floor.
    pub at_floor: bool,
    pub fits: Vec<OffdiagFit>,
    pub chosen: Option<OffdiagFit>,
    pub failure_radius: Option<f64>,
}

/// Fits `|K(x, y)| <= C e^{-M(h |(x, y)|)}` over grid points of `Omega_r`.
pub fn kernel_offdiag_report(
    k: &Kernel,
    r: f64,
    seq: &WeightSequence,
    hs: &[f64],
) -> Result<OffdiagReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param(format!("r = {r} outside (0, 1)")));
    }
    let g = k.grid;
    let global = k.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = 1e-13 * global.max(1.0);
    let mut pts = Vec::new();
    let mut below = 0;
    let mut count = 0;
    let mut max_abs: f64 = 0.0;
    for i in 0..g.n {
        for j in 0..g.n {
            let (x, y) = (g.x(i), g.x(j));
            if !in_omega(r, x, y) {
                continue;
            }
            count += 1;
            let v = k.at(i, j).norm();
            max_abs = max_abs.max(v);
            if v <= floor {
                below += 1;
            } else {
                pts.push(((x * x + y * y).sqrt(), v.ln()));
            }
        }
    }
    if count < 16 {
        return Err(Error::param(format!(
            "only {count} grid points in Omega_{r}; refine the grid"
        )));
    }
    let rad_max = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut fits = Vec::new();
    let mut failure_radius = None;
    for &h in hs {
        let mut all = f64::NEG_INFINITY;
        let mut inner = f64::NEG_INFINITY;
        let mut arg = 0.0;
        for &(rad, lv) in &pts {
            let v = lv + seq.associated_auto(h * rad).value;
            if v > all {
                all = v;
                arg = rad;
            }
            if rad <= 0.75 * rad_max {
                inner = inner.max(v);
            }
        }
        let stable = pts.is_empty() || all <= inner + 1e-9;
        if !stable && failure_radius.is_none() {
            failure_radius = Some(arg);
        }
        fits.push(OffdiagFit {
            h,
            ln_c: if pts.is_empty() { floor.ln() } else { all },
            stable,
        });
    }
    let chosen = fits
        .iter()
        .filter(|f| f.stable)
        .max_by(|a, b| a.h.total_cmp(&b.h))
        .copied();
    if chosen.is_some() {
        failure_radius = None;
    }
    Ok(OffdiagReport {
        r,
        points: count,
        max_abs,
        floor,
        below_floor: below,
        at_floor: pts.is_empty(),
        fits,
        chosen,
        failure_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{AmplitudeFn, Cq, Expr, SymbolFn};

    fn sym(t: &str) -> SymbolFn {
        SymbolFn::new(Expr::parse(t).unwrap())
    }

    fn hermite_derivative(k: usize, g: Grid) -> GridFunction {
        // h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}
        let vals = g
            .xs()
            .iter()
            .map(|&x| {
                let lower = if k == 0 {
                    0.0
                } else {
                    (k as f64 / 2.0).sqrt() * hermite_value(k - 1, x)
                };
                C64::new(
                    lower - ((k + 1) as f64 / 2.0).sqrt() * hermite_value(k + 1, x),
                    0.0,
                )
            })
            .collect();
        GridFunction::unchecked(g, vals, Space::Position)
    }

    #[test]
    fn gaussian_fourier_pair() {
        let g = Grid::default();
        let u = GridFunction::from_fn(g, |x| C64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let f = fourier(&u).unwrap();
        let err = f
            .values
            .iter()
            .zip(g.xis())
            .map(|(v, xi)| (v - (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        assert!(inverse_fourier(&f).unwrap().sup_distance(&u) < 1e-12);
    }

    #[test]
    fn hermite_functions() {
        let g = Grid::default();
        assert_eq!(hermite_value(0, 0.0), PI.powf(-0.25));
        let h: Vec<_> = (0..6).map(|k| hermite_testfn(k, g).unwrap()).collect();
        for (k, hk) in h.iter().enumerate() {
            assert!((hk.l2_norm() - 1.0).abs() < 1e-10);
            let f = fourier(hk).unwrap();
            let c = (2.0 * PI).sqrt() * Cq::minus_i_pow(k).to_c64();
            let err = f
                .values
                .iter()
                .zip(g.xis())
                .map(|(v, xi)| (v - c * hermite_value(k, xi)).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "k = {k}: {err}");
        }
        assert!(h[0].pairing(&h[1]).norm() < 1e-10);
        assert!(hermite_testfn(40, Grid::new(256, 6.0).unwrap()).is_err());
    }

    #[test]
    fn identity_and_derivative() {
        let g = Grid::default();
        for k in 0..4 {
            let u = hermite_testfn(k, g).unwrap();
            let du = hermite_derivative(k, g).map(|_, v| v * C64::new(0.0, -1.0));
            for tau in [0.0, 0.5, 1.0] {
                assert!(op_tau_apply(&sym("1"), tau, &u).unwrap().sup_distance(&u) < 1e-9);
                let v = op_tau_apply(&sym("xi"), tau, &u).unwrap();
                assert!(v.sup_distance(&du) < 1e-8, "{}", v.sup_distance(&du));
            }
        }
    }

    #[test]
    fn x_xi_quantisations() {
        // Op_tau(x xi) u = x D u - i tau u
        let g = Grid::default();
        let a = sym("x*xi");
        for k in 0..4 {
            let u = hermite_testfn(k, g).unwrap();
            let du = hermite_derivative(k, g);
            for tau in [0.0, 0.5, 1.0] {
                let want = GridFunction::unchecked(
                    g,
                    g.xs()
                        .iter()
                        .zip(du.values.iter().zip(&u.values))
                        .map(|(x, (d, v))| C64::new(0.0, -1.0) * x * d - C64::new(0.0, tau) * v)
                        .collect(),
                    Space::Position,
                );
                let got = op_tau_apply(&a, tau, &u).unwrap();
                assert!(
                    got.sup_distance(&want) < 1e-8,
                    "tau {tau}: {}",
                    got.sup_distance(&want)
                );
            }
            let spec = op0_spectral(&a, &u).unwrap();
            assert!(spec.sup_distance(&op_tau_apply(&a, 0.0, &u).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn gaussian_kernel_and_round_trip() {
        let g = Grid::default();
        let k = kernel_from_symbol(&sym("exp(-xi^2/2)"), 0.5, g).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..g.n() {
            for j in 0..g.n() {
                let t = g.x(i) - g.x(j);
                let want = (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
                err = err.max((k.at(i, j) - want).norm());
            }
        }
        assert!(err < 1e-8, "{err}");
        let k0 = kernel_from_symbol(&sym("exp(-xi^2/2)"), 0.0, g).unwrap();
        assert!(k0.sup_distance(&k) < 1e-10);

        let a = sym("exp(-x^2 - xi^2)");
        for tau in [0.0, 0.5, 1.0, 0.25] {
            let k = kernel_from_symbol(&a, tau, g).unwrap();
            let back = symbol_from_kernel(&k, tau).unwrap();
            let err = back.sup_distance(&GridSymbol::sample(&a, g));
            assert!(err < 1e-6, "tau {tau}: {err}");
        }
        let z = symbol_from_kernel(&Kernel::zeros(g), 0.5).unwrap();
        assert!(z.values.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn delta_kernel_mass() {
        let g = Grid::default();
        let k = kernel_from_symbol(&sym("1"), 0.0, g).unwrap();
        for i in 0..g.n() {
            let mass: C64 = (0..g.n()).map(|j| k.at(i, j)).sum::<C64>() * g.dx();
            assert!((mass - 1.0).norm() < 1e-8);
        }
        let seq = WeightSequence::gevrey(1.0, 64).unwrap();
        let rep = kernel_offdiag_report(&k, 0.5, &seq, &[0.5, 1.0]).unwrap();
        assert!(rep.max_abs < 1e-8 && rep.at_floor);
    }

    #[test]
    fn offdiag_fit_for_gaussian_kernel() {
        let g = Grid::default();
        let k = kernel_from_symbol(&sym("exp(-xi^2/2 - x^2)"), 0.0, g).unwrap();
        let seq = WeightSequence::gevrey(1.0, 64).unwrap();
        let hs = [0.25, 0.5, 1.0, 2.0];
        let a = kernel_offdiag_report(&k, 0.25, &seq, &hs).unwrap();
        let b = kernel_offdiag_report(&k, 0.5, &seq, &hs).unwrap();
        assert!(a.chosen.is_some());
        for (fa, fb) in a.fits.iter().zip(&b.fits) {
            assert!(fb.ln_c <= fa.ln_c);
        }
        assert!(kernel_offdiag_report(&k, 0.5, &seq, &hs).is_ok());
        let tiny = Kernel::zeros(Grid::new(4, 1.0).unwrap());
        assert!(kernel_offdiag_report(&tiny, 0.5, &seq, &hs).is_err());
    }

    #[test]
    fn amplitude_reduces_to_quantisation() {
        let g = Grid::new(128, 12.0).unwrap();
        let u = hermite_testfn(1, g).unwrap();
        let a = Expr::parse("exp(-x^2 - xi^2)").unwrap();
        let amp = AmplitudeFn::new(a.clone());
        let run = amplitude_apply(&amp, &u, &gaussian_mollifier, &[0.2, 0.1, 0.05, 0.025]).unwrap();
        let op = op_tau_apply(&SymbolFn::new(a), 0.0, &u).unwrap();
        assert!(
            run.limit.sup_distance(&op) < 1e-6,
            "{}",
            run.limit.sup_distance(&op)
        );
        assert!(run.cauchy_strictly_decreasing());
        let half = |t: f64| 0.5 * gaussian_mollifier(t);
        assert!(amplitude_apply(&amp, &u, &half, &[0.2, 0.1]).is_err());
    }
}

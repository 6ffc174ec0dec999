//! Small numerical helpers shared across modules.

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Prefix sums `out[p] = sum_{j<=p} terms[j]` with compensation.
pub fn prefix_sums(terms: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = Neumaier::default();
    terms
        .into_iter()
        .map(|t| {
            acc.add(t);
            acc.value()
        })
        .collect()
}

/// `ln k!` for `k = 0..=n`, compensated.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    prefix_sums((0..=n).map(|j| if j < 2 { 0.0 } else { (j as f64).ln() }))
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.reverse();
    out
}

/// Evenly spaced grid `lo, lo+step, ..., <= hi` (inclusive within half a step).
pub fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || hi < lo {
        return vec![lo];
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Japanese bracket `(1 + |v|^2)^{1/2}`.
pub fn bracket(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|t| t * t).sum::<f64>()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre_unit(8);
        let s: f64 = q.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-14);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut acc = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }
}

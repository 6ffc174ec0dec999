//! Truncated Taylor series ("jets") in one variable.
//!
//! A jet of order `K` stores `c_k = f^{(k)}(t0) / k!` for `k = 0..=K`.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<Complex64>,
}

impl Jet {
    pub fn constant(v: impl Into<Complex64>, order: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
        c[0] = v.into();
        Jet { c }
    }

    /// The identity map expanded at `t0`.
    pub fn variable(t0: impl Into<Complex64>, order: usize) -> Self {
        let mut j = Jet::constant(t0, order);
        if order >= 1 {
            j.c[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn zero(order: usize) -> Self {
        Jet::constant(0.0, order)
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// `f^{(k)}(t0)`.
    pub fn derivative(&self, k: usize) -> Complex64 {
        let mut f = 1.0;
        for j in 2..=k {
            f *= j as f64;
        }
        self.c[k] * f
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        Jet {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_const(&self, s: impl Into<Complex64>) -> Self {
        let mut out = self.clone();
        out.c[0] += s.into();
        out
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| v.norm_sqr() == 0.0)
    }

    pub fn recip(&self) -> Self {
        let k = self.order();
        let a0 = self.c[0];
        let mut b = vec![Complex64::new(0.0, 0.0); k + 1];
        b[0] = a0.inv();
        for n in 1..=k {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=n {
                s += self.c[j] * b[n - j];
            }
            b[n] = -s / a0;
        }
        Jet { c: b }
    }

    pub fn div(&self, other: &Jet) -> Self {
        self * &other.recip()
    }

    pub fn exp(&self) -> Self {
        let k = self.order();
        let mut b = vec![Complex64::new(0.0, 0.0); k + 1];
        b[0] = self.c[0].exp();
        if b[0].norm_sqr() == 0.0 {
            return Jet { c: b };
        }
        for n in 1..=k {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=n {
                s += self.c[j] * b[n - j] * j as f64;
            }
            b[n] = s / n as f64;
        }
        Jet { c: b }
    }

    pub fn ln(&self) -> Self {
        let k = self.order();
        let a0 = self.c[0];
        let mut b = vec![Complex64::new(0.0, 0.0); k + 1];
        b[0] = a0.ln();
        for n in 1..=k {
            let mut s = self.c[n] * n as f64;
            for j in 1..n {
                s -= b[j] * self.c[n - j] * j as f64;
            }
            b[n] = s / (a0 * n as f64);
        }
        Jet { c: b }
    }

    /// Real power with the principal branch.
    pub fn powf(&self, r: f64) -> Self {
        let k = self.order();
        let a0 = self.c[0];
        let mut b = vec![Complex64::new(0.0, 0.0); k + 1];
        b[0] = a0.powf(r);
        for n in 1..=k {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=n {
                s += self.c[j] * b[n - j] * ((r + 1.0) * j as f64 - n as f64);
            }
            b[n] = s / (a0 * n as f64);
        }
        Jet { c: b }
    }

    pub fn powi(&self, n: i64) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut out = Jet::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let k = self.order().min(rhs.order());
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        for (i, a) in self.c.iter().enumerate().take(k + 1) {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate().take(k + 1 - i) {
                c[i + j] += a * b;
            }
        }
        Jet { c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            c: self.c.iter().map(|v| -v).collect(),
        }
    }
}

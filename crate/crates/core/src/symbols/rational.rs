//! Exact complex rationals for symbol coefficients.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cq {
    pub re: BigRational,
    pub im: BigRational,
}

impl Cq {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Cq { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Cq {
            re,
            im: BigRational::zero(),
        }
    }

    pub fn int(n: i64) -> Self {
        Cq::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Cq::real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn i() -> Self {
        Cq::new(BigRational::zero(), BigRational::one())
    }

    /// `(-i)^k`.
    pub fn minus_i_pow(k: usize) -> Self {
        match k % 4 {
            0 => Cq::int(1),
            1 => -Cq::i(),
            2 => Cq::int(-1),
            _ => Cq::i(),
        }
    }

    /// Exact conversion of a finite float.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Cq::real)
    }

    /// Parse a decimal literal such as `12`, `0.25` or `1.5e-3` exactly.
    pub fn parse_decimal(text: &str) -> Option<Self> {
        let (mant, exp) = match text.find(['e', 'E']) {
            Some(k) => (&text[..k], text[k + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int, frac) = match mant.find('.') {
            Some(k) => (&mant[..k], &mant[k + 1..]),
            None => (mant, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().ok()?
        };
        let scale = exp - frac.len() as i32;
        let ten = BigInt::from(10);
        let r = if scale >= 0 {
            BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
        };
        Some(Cq::real(r))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let d = &self.re * &self.re + &self.im * &self.im;
        Some(Cq::new(&self.re / &d, -&self.im / &d))
    }

    pub fn powi(&self, n: i64) -> Option<Self> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut out = Cq::int(1);
        for _ in 0..n.unsigned_abs() {
            out = &out * &base;
        }
        Some(out)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for &Cq {
    type Output = Cq;
    fn add(self, o: &Cq) -> Cq {
        Cq::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub for &Cq {
    type Output = Cq;
    fn sub(self, o: &Cq) -> Cq {
        Cq::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &Cq {
    type Output = Cq;
    fn mul(self, o: &Cq) -> Cq {
        Cq::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for Cq {
    type Output = Cq;
    fn neg(self) -> Cq {
        Cq::new(-self.re, -self.im)
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Cq {
    /// Parseable text; non-real values are parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rat(&self.re)),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-&self.im).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}*i", fmt_rat(&self.im))
                }
            }
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                let a = self.im.abs();
                if a.is_one() {
                    write!(f, "({} {} i)", fmt_rat(&self.re), sign)
                } else {
                    write!(f, "({} {} {}*i)", fmt_rat(&self.re), sign, fmt_rat(&a))
                }
            }
        }
    }
}

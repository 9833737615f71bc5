//! Complex numbers with a shared power-of-two exponent.
//!
//! The mantissa pair is kept normalized so that the larger component lies
//! in `[1/2, 1)`, which leaves the full `i64` exponent range for magnitude.

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Split a finite nonzero `x` into `m * 2^e` with `|m|` in `[1/2, 1)`.
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: lift into the normal range first
        let (m, e) = frexp(x * f64::powi(2.0, 64));
        return (m, e - 64);
    }
    let e = raw - 1022;
    let m = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (1022_u64 << 52));
    (m, e)
}

/// `m * 2^e`, applied in steps so intermediate powers stay finite.
pub fn ldexp(m: f64, e: i64) -> f64 {
    let mut x = m;
    let mut e = e;
    while e > 1000 {
        x *= f64::powi(2.0, 1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= f64::powi(2.0, -1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::powi(2.0, e as i32)
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XComplex {
    pub re_m: f64,
    pub im_m: f64,
    pub e2: i64,
}

impl fmt::Debug for XComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)*2^{}", self.re_m, self.im_m, self.e2)
    }
}

impl XComplex {
    pub const ZERO: XComplex = XComplex { re_m: 0.0, im_m: 0.0, e2: 0 };
    pub const ONE: XComplex = XComplex { re_m: 0.5, im_m: 0.0, e2: 1 };

    /// Build from raw parts and normalize.
    pub fn new(re: f64, im: f64, e2: i64) -> XComplex {
        let big = re.abs().max(im.abs());
        if big == 0.0 {
            return XComplex::ZERO;
        }
        if !big.is_finite() {
            return XComplex { re_m: re, im_m: im, e2 };
        }
        let (_, e) = frexp(big);
        XComplex { re_m: ldexp(re, -e), im_m: ldexp(im, -e), e2: e2 + e }
    }

    pub fn from_c64(z: Complex64) -> XComplex {
        XComplex::new(z.re, z.im, 0)
    }

    pub fn from_real(x: f64) -> XComplex {
        XComplex::new(x, 0.0, 0)
    }

    /// `exp(ln_mag) * e^{i arg}` without ever forming `exp(ln_mag)`.
    pub fn from_polar(ln_mag: f64, arg: f64) -> XComplex {
        let q = (ln_mag / LN_2).floor();
        let m = ((ln_mag - q * LN_2).exp()) * 0.5;
        XComplex::new(m * arg.cos(), m * arg.sin(), q as i64 + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re_m == 0.0 && self.im_m == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.re_m.is_finite() && self.im_m.is_finite()
    }

    /// Plain complex value; may overflow to infinity or flush to zero.
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(ldexp(self.re_m, self.e2), ldexp(self.im_m, self.e2))
    }

    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.re_m.hypot(self.im_m).ln() + self.e2 as f64 * LN_2
    }

    pub fn arg(&self) -> f64 {
        self.im_m.atan2(self.re_m)
    }

    pub fn conj(&self) -> XComplex {
        XComplex { re_m: self.re_m, im_m: -self.im_m, e2: self.e2 }
    }

    pub fn scale_pow2(&self, k: i64) -> XComplex {
        if self.is_zero() {
            return *self;
        }
        XComplex { e2: self.e2 + k, ..*self }
    }

    pub fn checked_recip(&self) -> Result<XComplex> {
        if self.is_zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        let n = self.re_m * self.re_m + self.im_m * self.im_m;
        Ok(XComplex::new(self.re_m / n, -self.im_m / n, -self.e2))
    }

    pub fn recip(&self) -> XComplex {
        self.checked_recip().unwrap_or(XComplex { re_m: f64::INFINITY, im_m: 0.0, e2: 0 })
    }

    pub fn checked_div(&self, rhs: &XComplex) -> Result<XComplex> {
        Ok(*self * rhs.checked_recip()?)
    }

    pub fn powi(&self, k: i64) -> XComplex {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut acc = XComplex::ONE;
        let mut base = *self;
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// `ln|a| - ln|b|` style comparisons are the common case, but ordering
    /// by magnitude is occasionally handy.
    pub fn abs_cmp(&self, other: &XComplex) -> std::cmp::Ordering {
        self.ln_abs().total_cmp(&other.ln_abs())
    }
}

impl Mul for XComplex {
    type Output = XComplex;
    fn mul(self, b: XComplex) -> XComplex {
        XComplex::new(self.re_m * b.re_m - self.im_m * b.im_m, self.re_m * b.im_m + self.im_m * b.re_m, self.e2 + b.e2)
    }
}

impl Div for XComplex {
    type Output = XComplex;
    fn div(self, b: XComplex) -> XComplex {
        self * b.recip()
    }
}

impl Add for XComplex {
    type Output = XComplex;
    fn add(self, b: XComplex) -> XComplex {
        if self.is_zero() {
            return b;
        }
        if b.is_zero() {
            return self;
        }
        let (hi, lo) = if self.e2 >= b.e2 { (self, b) } else { (b, self) };
        let shift = lo.e2 - hi.e2;
        if shift < -1100 {
            return hi;
        }
        XComplex::new(hi.re_m + ldexp(lo.re_m, shift), hi.im_m + ldexp(lo.im_m, shift), hi.e2)
    }
}

impl Neg for XComplex {
    type Output = XComplex;
    fn neg(self) -> XComplex {
        XComplex { re_m: -self.re_m, im_m: -self.im_m, e2: self.e2 }
    }
}

impl Sub for XComplex {
    type Output = XComplex;
    fn sub(self, b: XComplex) -> XComplex {
        self + (-b)
    }
}

impl From<Complex64> for XComplex {
    fn from(z: Complex64) -> Self {
        XComplex::from_c64(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XOp {
    Add,
    Sub,
    Mul,
    Div,
    IntPow(i64),
}

/// Single entry point for the arithmetic table; `IntPow` ignores `b`.
pub fn xc_arith(a: XComplex, b: XComplex, op: XOp) -> Result<XComplex> {
    match op {
        XOp::Add => Ok(a + b),
        XOp::Sub => Ok(a - b),
        XOp::Mul => Ok(a * b),
        XOp::Div => a.checked_div(&b),
        XOp::IntPow(k) => {
            if k.unsigned_abs() > 1 << 16 {
                return Err(Error::Domain(format!("exponent {k} out of range")));
            }
            if k < 0 && a.is_zero() {
                return Err(Error::Domain("negative power of zero".into()));
            }
            Ok(a.powi(k))
        }
    }
}

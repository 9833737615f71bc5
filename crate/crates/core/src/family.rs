//! The hyperbolic family
//! `f(z) = z^{(-1)^{n-p} d_1} prod_i (z^{D_i} - a_i^{D_i})^{(-1)^{n-i-p}}`
//! and the McMullen maps `z^k + eta / z^l`.

use std::f64::consts::{LN_10, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::RationalMap;
use crate::numerics::XComplex;

/// One parameter `a_i`, stored by magnitude exponent and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub log10_mag: f64,
    pub phase_rad: f64,
}

impl Param {
    pub fn from_ln(ln_mag: f64, phase_rad: f64) -> Param {
        Param { log10_mag: ln_mag / LN_10, phase_rad: phase_rad.rem_euclid(TAU) }
    }

    pub fn ln_mag(&self) -> f64 {
        self.log10_mag * LN_10
    }

    pub fn to_x(&self) -> XComplex {
        XComplex::from_polar(self.ln_mag(), self.phase_rad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub p: u8,
    pub degrees: Vec<u32>,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
}

/// `sum 1/d_i < 1`, decided exactly when the products fit in `u128`.
pub fn reciprocal_sum_below_one(degrees: &[u32]) -> bool {
    let mut prod: u128 = 1;
    for &d in degrees {
        match prod.checked_mul(d as u128) {
            Some(v) => prod = v,
            None => return xi(degrees) < 1.0,
        }
    }
    let num: u128 = degrees.iter().map(|&d| prod / d as u128).sum();
    num < prod
}

pub fn xi(degrees: &[u32]) -> f64 {
    degrees.iter().map(|&d| 1.0 / d as f64).sum()
}

impl FamilySpec {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Positive real parameters given by their absolute values.
    pub fn from_magnitudes(p: u8, degrees: &[u32], mags: &[f64]) -> FamilySpec {
        FamilySpec {
            p,
            degrees: degrees.to_vec(),
            params: mags.iter().map(|&m| Param { log10_mag: m.log10(), phase_rad: 0.0 }).collect(),
        }
    }

    pub fn from_ln_magnitudes(p: u8, degrees: &[u32], ln_mags: &[f64]) -> FamilySpec {
        FamilySpec { p, degrees: degrees.to_vec(), params: ln_mags.iter().map(|&m| Param::from_ln(m, 0.0)).collect() }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |inv: &str, detail: String| out.push(Violation { invariant: inv.to_string(), detail });
        if self.p > 1 {
            bad("p in {0,1}", format!("p = {}", self.p));
        }
        let n = self.n();
        if n < 2 {
            bad("n >= 2", format!("n = {n}"));
        }
        for (i, &d) in self.degrees.iter().enumerate() {
            if d < 2 {
                bad("degrees >= 2", format!("d_{} = {d}", i + 1));
            }
        }
        if n >= 1 && self.degrees.iter().all(|&d| d > 0) && !reciprocal_sum_below_one(&self.degrees) {
            bad("sum of 1/d_i < 1", format!("sum of 1/d_i = {} not < 1", xi(&self.degrees)));
        }
        if self.params.len() + 1 != n {
            bad("n-1 parameters", format!("{} parameters for n = {n}", self.params.len()));
        }
        for (i, a) in self.params.iter().enumerate() {
            if !a.log10_mag.is_finite() || !a.phase_rad.is_finite() {
                bad("finite parameters", format!("a_{} is not finite", i + 1));
            }
            if !(0.0..TAU).contains(&a.phase_rad) {
                bad("phase in [0, 2pi)", format!("a_{} phase = {}", i + 1, a.phase_rad));
            }
        }
        for (i, w) in self.params.windows(2).enumerate() {
            if !(w[0].log10_mag < w[1].log10_mag) {
                bad(
                    "strict magnitude ordering",
                    format!("|a_{}| = 1e{} not < |a_{}| = 1e{}", i + 1, w[0].log10_mag, i + 2, w[1].log10_mag),
                );
            }
        }
        if let Some(last) = self.params.last() {
            if !(last.log10_mag < 0.0) {
                bad("|a_{n-1}| < 1", format!("|a_{}| = 1e{}", self.params.len(), last.log10_mag));
            }
        }
        out
    }

    pub fn compile(&self) -> Result<FamilyMap> {
        let v = self.validate();
        if !v.is_empty() {
            let msg: Vec<String> = v.iter().map(|x| format!("{}: {}", x.invariant, x.detail)).collect();
            return Err(Error::Validation(msg.join("; ")));
        }
        Ok(FamilyMap::new_unchecked(self))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

/// Which trap a trap maps into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trap {
    #[serde(rename = "D0")]
    Inner,
    #[serde(rename = "Dinf")]
    Outer,
}

/// Images of `D_0` and `D_inf` for the four parity cases.
pub fn basin_combinatorics(p: u8, n: usize) -> (Trap, Trap) {
    match (p, n % 2 == 1) {
        (1, true) => (Trap::Inner, Trap::Outer),
        (1, false) => (Trap::Outer, Trap::Outer),
        (_, true) => (Trap::Outer, Trap::Inner),
        (_, false) => (Trap::Inner, Trap::Inner),
    }
}

fn sign(k: i64) -> i64 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// A validated spec with the derived quantities precomputed.
#[derive(Debug, Clone)]
pub struct FamilyMap {
    pub spec: FamilySpec,
    pub p: u8,
    pub n: usize,
    /// `d_1..d_n`
    pub d: Vec<i64>,
    /// `D_i = d_i + d_{i+1}`, `i = 1..n-1`
    pub big_d: Vec<i64>,
    pub a: Vec<XComplex>,
    /// `a_i^{D_i}`
    pub c: Vec<XComplex>,
    pub ln_a: Vec<f64>,
    /// exponent sign of the leading monomial, `(-1)^{n-p}`
    pub e0: i64,
    /// exponent sign of factor `i`, `(-1)^{n-i-p}`
    pub e: Vec<i64>,
}

impl FamilyMap {
    pub fn new_unchecked(spec: &FamilySpec) -> FamilyMap {
        let n = spec.n();
        let p = spec.p as i64;
        let d: Vec<i64> = spec.degrees.iter().map(|&x| x as i64).collect();
        let big_d: Vec<i64> = (0..n - 1).map(|i| d[i] + d[i + 1]).collect();
        let a: Vec<XComplex> = spec.params.iter().map(|x| x.to_x()).collect();
        let c = a.iter().zip(&big_d).map(|(a, &k)| a.powi(k)).collect();
        FamilyMap {
            spec: spec.clone(),
            p: spec.p,
            n,
            ln_a: spec.params.iter().map(|x| x.ln_mag()).collect(),
            e0: sign(n as i64 - p),
            e: (1..n as i64).map(|i| sign(n as i64 - i - p)).collect(),
            d,
            big_d,
            a,
            c,
        }
    }

    pub fn degree(&self) -> i64 {
        self.d.iter().sum()
    }

    /// Exponent of the monomial factor `z^{(-1)^{n-p} d_1}`.
    pub fn lead_exp(&self) -> i64 {
        self.e0 * self.d[0]
    }

    fn factor_ratio(&self, zx: XComplex, i: usize) -> XComplex {
        // q = a_i^{D_i} / z^{D_i}
        self.c[i] / zx.powi(self.big_d[i])
    }

    /// `(-1)^p z f'(z) / f(z)` and `z` times its derivative.
    pub fn log_deriv_pair(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if z.norm() == 0.0 {
            return Err(Error::Pole("z = 0".into()));
        }
        let zx = XComplex::from_c64(z);
        let n = self.n as i64;
        let mut f = Complex64::new(sign(n) as f64 * self.d[0] as f64, 0.0);
        let mut g = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        for i in 0..self.n - 1 {
            let s = sign(n - (i as i64 + 1)) as f64;
            let dd = self.big_d[i] as f64;
            let q = self.factor_ratio(zx, i);
            let (t, h) = if q.ln_abs() <= 0.0 {
                let q = q.to_c64();
                let om = one - q;
                (om.inv(), q / (om * om))
            } else {
                let qp = q.recip().to_c64();
                let om = one - qp;
                (-qp / om, qp / (om * om))
            };
            if !t.is_finite() || !h.is_finite() {
                return Err(Error::Pole(format!("z on the zero/pole circle of factor {}", i + 1)));
            }
            f += t * (s * dd);
            g -= h * (s * dd * dd);
        }
        Ok((f, g))
    }

    pub fn eval_log_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.log_deriv_pair(z)?.0)
    }

    /// True when `z^{D_i}` lies within relative distance 1e-3 of `a_i^{D_i}`
    /// for some `i`; values there are returned but carry less accuracy.
    pub fn near_singularity(&self, z: Complex64) -> bool {
        let zx = XComplex::from_c64(z);
        (0..self.n - 1).any(|i| {
            let q = self.factor_ratio(zx, i);
            (q - XComplex::ONE).ln_abs() < (1e-3f64).ln()
        })
    }
}

impl RationalMap for FamilyMap {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        let zx = XComplex::from_c64(z);
        if zx.is_zero() {
            return match self.lead_exp() {
                k if k < 0 => Err(Error::Pole("z = 0".into())),
                _ => Ok(XComplex::ZERO),
            };
        }
        let mut acc = zx.powi(self.lead_exp());
        for i in 0..self.n - 1 {
            let fac = zx.powi(self.big_d[i]) - self.c[i];
            if fac.is_zero() {
                if self.e[i] < 0 {
                    return Err(Error::Pole(format!("root of z^{} = a_{}^{}", self.big_d[i], i + 1, self.big_d[i])));
                }
                return Ok(XComplex::ZERO);
            }
            acc = if self.e[i] > 0 { acc * fac } else { acc / fac };
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McMullenSpec {
    pub k: u32,
    pub l: u32,
    pub eta: Complex64,
}

impl McMullenSpec {
    /// The same map written as a two-band family member `(p=1, d=(l,k))`.
    pub fn to_family(&self) -> FamilySpec {
        let minus_eta = -self.eta;
        let big_d = (self.k + self.l) as f64;
        FamilySpec {
            p: 1,
            degrees: vec![self.l, self.k],
            params: vec![Param::from_ln(minus_eta.norm().ln() / big_d, minus_eta.arg() / big_d)],
        }
    }

    pub fn symmetry_radius(&self) -> f64 {
        self.eta.norm().powf(1.0 / (self.k + self.l) as f64)
    }
}

pub fn mcmullen_eval(spec: &McMullenSpec, z: Complex64) -> Result<Complex64> {
    Ok(spec.eval_x(z)?.to_c64())
}

impl RationalMap for McMullenSpec {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        if z.norm() == 0.0 {
            return Err(Error::Pole("z = 0".into()));
        }
        let zx = XComplex::from_c64(z);
        Ok(zx.powi(self.k as i64) + XComplex::from_c64(self.eta) / zx.powi(self.l as i64))
    }
}

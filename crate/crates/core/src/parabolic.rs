//! Two non-hyperbolic families with a parabolic fixed point:
//! `P_lambda(z) = ((1/n)((1+z)^n - 1) + (lambda z)^{m+n}) / (1 - (lambda z)^{m+n})`
//! with the fixed point at 0, and
//! `P_n(z) = A (n+1) z^{+-(n+1)} / (n z^{n+1} + 1) prod (z^{2n+2} - b_i^{2n+2})^{+-1} + B`
//! with the fixed point at 1.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    circles_extrema, expected_orientation, extract_signature, profile_failures, ring_image_check, spec_hash,
    winding_profile, CertificationReport, Check, Geometry, Region, Ring, Verdict,
};
use crate::critical::{NEWTON_MAX_STEPS, NEWTON_TOL};
use crate::error::{Error, Result};
use crate::family::{basin_combinatorics, Param, Trap};
use crate::maps::RationalMap;
use crate::numerics::circle::{circle_points, linspace, winding_adaptive};
use crate::numerics::XComplex;

/// Default angular radius of the exclusions around parabolic contact points.
pub const DEFAULT_EXCLUSION: f64 = 1e-3;
/// Slack for non-strict containment inside the exclusions.
pub const NONSTRICT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLambdaSpec {
    pub m: u32,
    pub n: u32,
    pub lambda: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnSpec {
    pub n: u32,
    pub b: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParabolicSpec {
    Plambda(PLambdaSpec),
    Pn(PnSpec),
}

impl PLambdaSpec {
    pub fn new(m: u32, n: u32, lambda: Complex64) -> PLambdaSpec {
        PLambdaSpec { m, n, lambda: Param::from_ln(lambda.norm().ln(), lambda.arg()) }
    }

    pub fn r0(&self) -> f64 {
        (self.n as f64 / self.m as f64).powf(1.0 / (self.m + self.n) as f64)
    }

    /// `ln` of `1 / (2^{10m} n^3)`, the size bound under which the Cantor
    /// circle structure is guaranteed.
    pub fn ln_lambda_max(&self) -> f64 {
        -(10.0 * self.m as f64 * LN_2 + 3.0 * (self.n as f64).ln())
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m as u64, self.n as u64);
        if m < 2 || n < 2 || m + n >= m * n {
            return Err(Error::Validation(format!("need m, n >= 2 with 1/m + 1/n < 1, got m={m}, n={n}")));
        }
        if m + n > 4096 {
            return Err(Error::Validation("degree m+n too large".into()));
        }
        if !self.lambda.log10_mag.is_finite() || !self.lambda.phase_rad.is_finite() {
            return Err(Error::Validation("lambda must be a finite nonzero number".into()));
        }
        Ok(())
    }

    pub fn compile(&self) -> Result<PLambdaMap> {
        self.validate()?;
        let big_n = self.m + self.n;
        let mut binom = vec![1.0f64; self.n as usize + 1];
        for k in 1..=self.n as usize {
            binom[k] = binom[k - 1] * (self.n as usize - k + 1) as f64 / k as f64;
        }
        Ok(PLambdaMap {
            spec: self.clone(),
            m: self.m,
            n: self.n,
            big_n,
            lambda: self.lambda.to_x(),
            ln_lambda: self.lambda.ln_mag(),
            phase: self.lambda.phase_rad,
            binom,
        })
    }
}

impl PnSpec {
    /// `|b_i| = s^i`, all phases zero.
    pub fn geometric(n: u32, s: f64) -> PnSpec {
        let b = (1..n).map(|i| Param::from_ln(i as f64 * s.ln(), 0.0)).collect();
        PnSpec { n, b }
    }

    /// `s` taken as `|b_1|`.
    pub fn ln_s(&self) -> f64 {
        self.b.first().map(|p| p.ln_mag()).unwrap_or(f64::NAN)
    }

    pub fn is_geometric(&self) -> bool {
        let ls = self.ln_s();
        self.b.iter().enumerate().all(|(k, p)| (p.ln_mag() - (k + 1) as f64 * ls).abs() <= 1e-12 * ls.abs().max(1.0))
    }

    pub fn ln_s_max(&self) -> f64 {
        -(25.0 * (self.n as f64).powi(2)).ln()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > 64 {
            return Err(Error::Validation(format!("n must be in 2..=64, got {}", self.n)));
        }
        if self.b.len() + 1 != self.n as usize {
            return Err(Error::Validation(format!("expected {} values b_i, got {}", self.n - 1, self.b.len())));
        }
        let mut prev = 0.0;
        for (i, p) in self.b.iter().enumerate() {
            let l = p.ln_mag();
            if !l.is_finite() || !p.phase_rad.is_finite() {
                return Err(Error::Validation(format!("b_{} is not finite and nonzero", i + 1)));
            }
            if l >= prev {
                return Err(Error::Validation(format!("need 1 > |b_1| > ... > |b_(n-1)|, violated at b_{}", i + 1)));
            }
            prev = l;
        }
        Ok(())
    }

    pub fn compile(&self) -> Result<PnMap> {
        self.validate()?;
        let n = self.n;
        let k = 2 * n + 2;
        let c_x: Vec<XComplex> =
            self.b.iter().map(|p| XComplex::from_polar(k as f64 * p.ln_mag(), k as f64 * p.phase_rad)).collect();
        let b: Vec<Complex64> = self.b.iter().map(|p| Complex64::from_polar(p.ln_mag().exp(), p.phase_rad)).collect();
        let c: Vec<Complex64> = c_x.iter().map(|x| x.to_c64()).collect();
        let (a_n, b_n, c_n) = compute_abc(n, &c)?;
        Ok(PnMap {
            spec: self.clone(),
            n,
            k,
            e0: if n % 2 == 1 { n as i64 + 1 } else { -(n as i64 + 1) },
            b,
            ln_b: self.b.iter().map(|p| p.ln_mag()).collect(),
            c_x,
            a_n,
            b_n,
            c_n,
        })
    }
}

/// `(A_n, B_n, C_n)` from the powers `c_i = b_i^{2n+2}`.
pub fn compute_abc(n: u32, c: &[Complex64]) -> Result<(Complex64, Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    let k = (2 * n + 2) as f64;
    let mut cn = Complex64::new(0.0, 0.0);
    let mut prod = one;
    for (idx, &ci) in c.iter().enumerate() {
        let i = idx + 1;
        let d = one - ci;
        if d == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain(format!("b_{i}^(2n+2) = 1")));
        }
        if i % 2 == 1 {
            cn += ci / d;
            prod /= d;
        } else {
            cn -= ci / d;
            prod *= d;
        }
    }
    let den = one + k * cn;
    if den.norm() == 0.0 {
        return Err(Error::Domain("1 + (2n+2) C_n = 0".into()));
    }
    Ok((prod / den, k * cn / den, cn))
}

#[derive(Debug, Clone)]
pub struct PLambdaMap {
    pub spec: PLambdaSpec,
    pub m: u32,
    pub n: u32,
    pub big_n: u32,
    pub lambda: XComplex,
    pub ln_lambda: f64,
    pub phase: f64,
    binom: Vec<f64>,
}

impl PLambdaMap {
    /// `(1+z)^n - 1` expanded, so there is no cancellation near 0.
    fn shifted_power(&self, z: XComplex) -> XComplex {
        let n = self.n as usize;
        let mut acc = XComplex::from_real(self.binom[n]);
        for k in (1..n).rev() {
            acc = acc * z + XComplex::from_real(self.binom[k]);
        }
        acc * z
    }

    pub fn r0(&self) -> f64 {
        self.spec.r0()
    }

    /// `ln` of the outer trap radius `2 / |lambda|^{1 + n/m}`.
    pub fn ln_r_out(&self) -> f64 {
        LN_2 - (1.0 + self.n as f64 / self.m as f64) * self.ln_lambda
    }

    /// The ring `1/(2|lambda|) < |z| < 2/|lambda|` holding the free critical points.
    pub fn ring(&self) -> Ring {
        Ring { ln_lo: -LN_2 - self.ln_lambda, ln_hi: LN_2 - self.ln_lambda }
    }

    pub fn geometry(&self) -> Geometry {
        let (d0, dinf) = basin_combinatorics(0, 2);
        Geometry {
            n: 2,
            inner: Region::Disk { center: Complex64::new(-0.75, 0.0), ln_radius: 0.75f64.ln() },
            outer: Region::exterior0(self.ln_r_out()),
            inner_maps_to: d0,
            outer_maps_to: dinf,
            rings: vec![self.ring()],
            ring_maps_to: vec![Trap::Outer],
            orientation: expected_orientation(0, 2),
        }
    }
}

impl RationalMap for PLambdaMap {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        if !z.is_finite() {
            return Ok(-XComplex::ONE);
        }
        let zx = XComplex::from_c64(z);
        let wn = (self.lambda * zx).powi(self.big_n as i64);
        let den = XComplex::ONE - wn;
        if den.is_zero() {
            return Err(Error::Pole(format!("(lambda z)^(m+n) = 1 at {z}")));
        }
        let num = self.shifted_power(zx) * XComplex::from_real(1.0 / self.n as f64) + wn;
        Ok(num * den.recip())
    }
}

#[derive(Debug, Clone)]
pub struct PnMap {
    pub spec: PnSpec,
    pub n: u32,
    /// `2n + 2`
    pub k: u32,
    /// exponent of the leading monomial, `(-1)^{n+1} (n+1)`
    pub e0: i64,
    pub b: Vec<Complex64>,
    pub ln_b: Vec<f64>,
    c_x: Vec<XComplex>,
    pub a_n: Complex64,
    pub b_n: Complex64,
    pub c_n: Complex64,
}

impl PnMap {
    pub fn ln_s(&self) -> f64 {
        self.ln_b[0]
    }

    /// `ln eps = (n + 1/2) ln s`; also the `ln` radius of the inner trap.
    pub fn ln_eps(&self) -> f64 {
        (self.n as f64 + 0.5) * self.ln_s()
    }

    /// Ring around `|b_i|` (1-based `i`) of relative half-width `2 eps`.
    pub fn ring(&self, i: usize) -> Ring {
        let e = 2.0 * self.ln_eps().exp();
        Ring { ln_lo: self.ln_b[i - 1] + (-e).ln_1p(), ln_hi: self.ln_b[i - 1] + e.ln_1p() }
    }

    pub fn ring_target(i: usize) -> Trap {
        if i % 2 == 1 {
            Trap::Inner
        } else {
            Trap::Outer
        }
    }

    /// Rings ordered by radius, innermost (`i = n-1`) first.
    pub fn rings(&self) -> Vec<(usize, Ring)> {
        (1..self.n as usize).rev().map(|i| (i, self.ring(i))).collect()
    }

    pub fn geometry(&self) -> Geometry {
        let n = self.n as usize;
        let (d0, dinf) = basin_combinatorics(1, n);
        let rings = self.rings();
        Geometry {
            n,
            inner: Region::disk0(self.ln_eps()),
            outer: Region::exterior0(0.0),
            inner_maps_to: d0,
            outer_maps_to: dinf,
            ring_maps_to: rings.iter().map(|&(i, _)| PnMap::ring_target(i)).collect(),
            rings: rings.into_iter().map(|(_, r)| r).collect(),
            orientation: expected_orientation(1, n),
        }
    }

    /// `F_n(z) = z P'(z) / (P(z) - B)` together with `z F_n'(z)` and the
    /// size of the largest term, for residuals.
    pub fn log_deriv(&self, z: Complex64) -> (Complex64, Complex64, f64) {
        let k = self.k as f64;
        let n1 = (self.n + 1) as f64;
        let lz = z.norm().ln();
        let az = z.arg();
        let one = Complex64::new(1.0, 0.0);
        let mut f = Complex64::new(self.e0 as f64, 0.0);
        let mut zf = Complex64::new(0.0, 0.0);
        let mut scale = self.e0.unsigned_abs() as f64;
        for (idx, (&lb, bp)) in self.ln_b.iter().zip(&self.spec.b).enumerate() {
            let c = if idx % 2 == 0 { k } else { -k };
            let ln_x = k * (lb - lz);
            let arg_x = k * (bp.phase_rad - az);
            // y = 1 / (1 - (b/z)^k), computed from whichever side is small
            let y = if ln_x > 0.0 {
                let inv = Complex64::from_polar((-ln_x).exp(), -arg_x);
                -inv / (one - inv)
            } else {
                one / (one - Complex64::from_polar(ln_x.exp(), arg_x))
            };
            f += c * y;
            zf += -k * c * y * (y - one);
            scale = scale.max((c * y).norm());
        }
        let v = self.n as f64 * z.powu(self.n + 1);
        let last = n1 * v / (v + one);
        f -= last;
        zf -= n1 * n1 * v / ((v + one) * (v + one));
        (f, zf, scale.max(last.norm()))
    }
}

impl RationalMap for PnMap {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        let bx = XComplex::from_c64(self.b_n);
        let ax = XComplex::from_c64(self.a_n);
        let n = self.n as i64;
        if !z.is_finite() {
            return Ok(ax * XComplex::from_real((n + 1) as f64 / n as f64) + bx);
        }
        if z == Complex64::new(0.0, 0.0) {
            return if self.e0 < 0 { Err(Error::Pole("z = 0".into())) } else { Ok(bx) };
        }
        let zx = XComplex::from_c64(z);
        let den = XComplex::from_real(n as f64) * zx.powi(n + 1) + XComplex::ONE;
        if den.is_zero() {
            return Err(Error::Pole(format!("n z^(n+1) = -1 at {z}")));
        }
        let mut num = XComplex::from_real((n + 1) as f64) * zx.powi(self.e0);
        let mut dens = den;
        let zk = zx.powi(self.k as i64);
        for (idx, c) in self.c_x.iter().enumerate() {
            let fac = zk - *c;
            if idx % 2 == 0 {
                num = num * fac;
            } else {
                if fac.is_zero() {
                    return Err(Error::Pole(format!("z^(2n+2) = b_{}^(2n+2) at {z}", idx + 1)));
                }
                dens = dens * fac;
            }
        }
        Ok(ax * num * dens.recip() + bx)
    }
}

#[derive(Debug, Clone)]
pub enum ParabolicMap {
    PLambda(PLambdaMap),
    Pn(PnMap),
}

impl ParabolicSpec {
    pub fn compile(&self) -> Result<ParabolicMap> {
        Ok(match self {
            ParabolicSpec::Plambda(s) => ParabolicMap::PLambda(s.compile()?),
            ParabolicSpec::Pn(s) => ParabolicMap::Pn(s.compile()?),
        })
    }
}

impl ParabolicMap {
    pub fn fixed_point(&self) -> Complex64 {
        match self {
            ParabolicMap::PLambda(_) => Complex64::new(0.0, 0.0),
            ParabolicMap::Pn(_) => Complex64::new(1.0, 0.0),
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self {
            ParabolicMap::PLambda(p) => p.geometry(),
            ParabolicMap::Pn(p) => p.geometry(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ParabolicMap::PLambda(_) => "plambda",
            ParabolicMap::Pn(_) => "pn",
        }
    }

    pub fn spec(&self) -> ParabolicSpec {
        match self {
            ParabolicMap::PLambda(p) => ParabolicSpec::Plambda(p.spec.clone()),
            ParabolicMap::Pn(p) => ParabolicSpec::Pn(p.spec.clone()),
        }
    }
}

impl RationalMap for ParabolicMap {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        match self {
            ParabolicMap::PLambda(p) => p.eval_x(z),
            ParabolicMap::Pn(p) => p.eval_x(z),
        }
    }
}

pub fn plambda_eval(spec: &PLambdaSpec, z: Complex64) -> Result<Complex64> {
    spec.compile()?.eval(z)
}

pub fn pn_eval(spec: &PnSpec, z: Complex64) -> Result<Complex64> {
    spec.compile()?.eval(z)
}

/// Central differences at steps `h` and `h/2`, combined to cancel the
/// `h^2` error term.
pub fn richardson_derivative<M: RationalMap + ?Sized>(map: &M, z: Complex64, h: f64) -> Result<Complex64> {
    let d = |h: f64| -> Result<Complex64> {
        let hc = Complex64::new(h, 0.0);
        Ok((map.eval(z + hc)? - map.eval(z - hc)?) / (2.0 * h))
    };
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub point: Complex64,
    pub value: Complex64,
    pub multiplier: Complex64,
    /// `|P(z*) - z*|`
    pub value_residual: f64,
    /// `|P'(z*) - expected|`
    pub multiplier_residual: f64,
}

pub fn parabolic_fixed_check<M: RationalMap + ?Sized>(
    map: &M,
    fixed_point: Complex64,
    expected_multiplier: Complex64,
) -> Result<FixedPointCheck> {
    let value = map.eval(fixed_point)?;
    let multiplier = richardson_derivative(map, fixed_point, 1e-3)?;
    Ok(FixedPointCheck {
        point: fixed_point,
        value,
        multiplier,
        value_residual: (value - fixed_point).norm(),
        multiplier_residual: (multiplier - expected_multiplier).norm(),
    })
}

#[derive(Debug, Clone)]
pub struct ParabolicOptions {
    pub samples: usize,
    /// angular radius of the exclusions at the parabolic contact points
    pub exclusion: f64,
    pub ring_circles: usize,
}

impl Default for ParabolicOptions {
    fn default() -> Self {
        ParabolicOptions { samples: 1 << 14, exclusion: DEFAULT_EXCLUSION, ring_circles: 16 }
    }
}

/// `tol` against a residual, as a log margin.
fn tol_margin(res: f64, tol: f64) -> f64 {
    tol.ln() - res.max(1e-300).ln()
}

fn nonstrict(name: String, margin: f64) -> Check {
    Check { name, margin_log: margin, pass: margin >= -NONSTRICT_TOL }
}

/// Split boundary samples into those outside and inside the exclusions and
/// return the smallest margin of each group.
fn split_margins<F>(points: &[(Complex64, bool)], margin: F) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    points
        .par_iter()
        .map(|&(z, excluded)| {
            let m = margin(z)?;
            if m.is_nan() {
                return Err(Error::Resolution(format!("NaN margin at {z}")));
            }
            Ok(if excluded { (f64::INFINITY, m) } else { (m, f64::INFINITY) })
        })
        .try_reduce(|| (f64::INFINITY, f64::INFINITY), |a, b| Ok((a.0.min(b.0), a.1.min(b.1))))
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn ln_abs_shift<M: RationalMap + ?Sized>(map: &M, z: Complex64, shift: Complex64) -> Result<f64> {
    match map.eval_x(z) {
        Ok(v) => Ok((v + XComplex::from_c64(shift)).ln_abs()),
        Err(Error::Pole(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn plambda_trap_checks(map: &PLambdaMap, opts: &ParabolicOptions) -> Result<Vec<Check>> {
    let c = Complex64::new(-0.75, 0.0);
    let ln_r = 0.75f64.ln();
    let pts: Vec<(Complex64, bool)> = (0..opts.samples)
        .map(|k| {
            let th = TAU * k as f64 / opts.samples as f64;
            (c + Complex64::from_polar(0.75, th), angular_distance(th, 0.0) <= opts.exclusion)
        })
        .collect();
    let (out, inside) = split_margins(&pts, |z| Ok(ln_r - ln_abs_shift(map, z, Complex64::new(0.75, 0.0))?))?;
    let mut checks = vec![
        Check::new("P(closed D(-3/4,3/4)) in D(-3/4,3/4) outside exclusion", out),
        nonstrict("P(closed D(-3/4,3/4)) in closed D(-3/4,3/4) near 0".into(), inside),
    ];
    let ln_out = map.ln_r_out();
    let radii: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0].iter().map(|o| ln_out + o).collect();
    let pts: Vec<(Complex64, bool)> = radii
        .iter()
        .flat_map(|&l| circle_points(Complex64::new(0.0, 0.0), l.exp(), opts.samples))
        .map(|z| (z, false))
        .collect();
    let (m, _) = split_margins(&pts, |z| Ok(-LN_2 - ln_abs_shift(map, z, Complex64::new(1.0, 0.0))?))?;
    checks.push(Check::new("|P(z) + 1| < 1/2 on the outer trap", m));
    Ok(checks)
}

fn pn_trap_checks(map: &PnMap, opts: &ParabolicOptions) -> Result<Vec<Check>> {
    let n1 = (map.n + 1) as f64;
    let pts: Vec<(Complex64, bool)> = (0..opts.samples)
        .map(|k| {
            let th = TAU * k as f64 / opts.samples as f64;
            let near = (0..=map.n).any(|j| angular_distance(th, TAU * j as f64 / n1) <= opts.exclusion);
            (Complex64::from_polar(1.0, th), near)
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    let (out, inside) = split_margins(&pts, |z| ln_abs_shift(map, z, zero))?;
    let mut checks = vec![
        Check::new("|P(z)| > 1 on the unit circle outside exclusions", out),
        nonstrict("|P(z)| >= 1 on the unit circle near roots of unity".into(), inside),
    ];
    let outside: Vec<f64> = vec![0.5, 1.0, 2.0, 4.0];
    let (lo, _) = circles_extrema(map, &outside, opts.samples)?;
    checks.push(Check::new("|P(z)| > 1 for |z| > 1", lo));
    let ln_r = map.ln_eps();
    let inner: Vec<f64> = [0.0, -0.5, -1.0, -2.0, -4.0].iter().map(|o| ln_r + o).collect();
    let (lo, hi) = circles_extrema(map, &inner, opts.samples)?;
    checks.push(if map.n % 2 == 1 {
        Check::new("P(closed D_r) in D_r", ln_r - hi)
    } else {
        Check::new("P(closed D_r) in |z| > 1", lo)
    });
    Ok(checks)
}

/// Boundary-sampled trap conditions for either family. Ring conditions are
/// reported separately by [`certify_parabolic`].
pub fn trap_checks_parabolic(map: &ParabolicMap, opts: &ParabolicOptions) -> Result<Vec<Check>> {
    match map {
        ParabolicMap::PLambda(p) => plambda_trap_checks(p, opts),
        ParabolicMap::Pn(p) => pn_trap_checks(p, opts),
    }
}

/// Critical points found near one predicted cluster. Positions are stored
/// as `(z - center) / e^{ln_scale}` so clusters far below double range
/// around `center` stay resolvable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCluster {
    pub label: String,
    pub center: Complex64,
    pub ln_scale: f64,
    pub predicted: Vec<Complex64>,
    pub refined: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// `ln` of the measured distance the bound applies to
    pub ln_dist: Vec<f64>,
    pub ln_bound: f64,
    pub within_bound: bool,
    pub distinct: bool,
    /// number of critical points in the cluster region by the argument principle
    pub count: Option<i64>,
}

impl ParabolicCluster {
    /// Refined positions in plain coordinates.
    pub fn points(&self) -> Vec<Complex64> {
        let s = self.ln_scale.exp();
        self.refined.iter().map(|u| self.center + u * s).collect()
    }
}

/// Damped Newton on `f(u) = (F, dF/du, scale)`, residual `|F| / scale`.
fn newton<F: Fn(Complex64) -> (Complex64, Complex64, f64)>(f: F, u0: Complex64) -> Result<(Complex64, f64)> {
    let mut u = u0;
    for _ in 0..NEWTON_MAX_STEPS {
        let (v, d, _) = f(u);
        if v == Complex64::new(0.0, 0.0) {
            break;
        }
        let mut step = v / d;
        if !step.is_finite() {
            return Err(Error::Convergence(format!("derivative vanished near {u}")));
        }
        let cap = 0.25 * u.norm().max(1e-300);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        u -= step;
        if step.norm() <= 1e-15 * u.norm() {
            break;
        }
    }
    let (v, _, scale) = f(u);
    let res = v.norm() / scale;
    if !(res < NEWTON_TOL) {
        return Err(Error::Convergence(format!("residual {res:e} at {u} from seed {u0}")));
    }
    Ok((u, res))
}

fn distinct(points: &[Complex64]) -> bool {
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-300);
    points.iter().enumerate().all(|(i, a)| points[i + 1..].iter().all(|b| (a - b).norm() > 1e-9 * scale))
}

/// Critical points of `P_lambda` near `-1`, in `t = 1 + z` scaled by
/// `sigma ~ |lambda|^{(m+n)/(n-1)}`.
fn plambda_near_minus_one(map: &PLambdaMap) -> Result<ParabolicCluster> {
    let (m, n, big) = (map.m as f64, map.n as f64, map.big_n as f64);
    let nn = map.n as i32;
    let bn = map.big_n as i32;
    // t^{n-1} = -lambda^N (t-1)^{N-1} g(t), g(0) = (N/n)(n-1)
    let g0 = big / n * (n - 1.0);
    let ln_rho = big * map.ln_lambda + g0.ln();
    let arg_rho = big * map.phase + PI * (bn as f64);
    let ln_sigma = ln_rho / (n - 1.0);
    let sigma = ln_sigma.exp();
    let kappa = Complex64::from_polar((big * map.ln_lambda - (n - 1.0) * ln_sigma).exp(), big * map.phase);
    let one = Complex64::new(1.0, 0.0);
    let g = |t: Complex64| (1.0 + m / n) * (t.powi(nn) + (n - 1.0)) - (t - one) * t.powi(nn - 1);
    let dg =
        |t: Complex64| (1.0 + m / n) * n * t.powi(nn - 1) - t.powi(nn - 1) - (t - one) * (n - 1.0) * t.powi(nn - 2);
    let h = |tau: Complex64| {
        let t = sigma * tau;
        let p = tau.powi(nn - 1);
        let q = kappa * (t - one).powi(bn - 1) * g(t);
        let v = p + q;
        let d = (n - 1.0) * tau.powi(nn - 2)
            + kappa * sigma * ((big - 1.0) * (t - one).powi(bn - 2) * g(t) + (t - one).powi(bn - 1) * dg(t));
        (v, d, p.norm().max(q.norm()))
    };
    let seeds: Vec<Complex64> =
        (0..map.n - 1).map(|k| Complex64::from_polar(1.0, (arg_rho + TAU * k as f64) / (n - 1.0))).collect();
    let mut refined = Vec::new();
    let mut residuals = Vec::new();
    for &s in &seeds {
        let (u, r) = newton(h, s)?;
        refined.push(u);
        residuals.push(r);
    }
    let ln_dist: Vec<f64> = refined.iter().map(|u| ln_sigma + u.norm().ln()).collect();
    let ln_bound = map.ln_lambda;
    // argument principle on |t| = |lambda|, scaled to the unit circle
    let lam = map.ln_lambda.exp();
    let kappa2 = Complex64::from_polar((big * map.ln_lambda - (n - 1.0) * map.ln_lambda).exp(), big * map.phase);
    let count = winding_adaptive(
        |u| {
            let t = lam * u;
            Ok(XComplex::from_c64(u.powi(nn - 1) + kappa2 * (t - one).powi(bn - 1) * g(t)))
        },
        Complex64::new(0.0, 0.0),
        1.0,
        256,
    )
    .ok();
    Ok(ParabolicCluster {
        label: "near -1".into(),
        center: Complex64::new(-1.0, 0.0),
        ln_scale: ln_sigma,
        within_bound: ln_dist.iter().all(|&d| d < ln_bound),
        distinct: distinct(&refined),
        predicted: seeds,
        refined,
        residuals,
        ln_dist,
        ln_bound,
        count,
    })
}

/// Critical points of `P_lambda` near `|z| = r_0/|lambda|`, in `u = |lambda| z`.
fn plambda_ring(map: &PLambdaMap) -> Result<ParabolicCluster> {
    let (m, n, big) = (map.m as f64, map.n as f64, map.big_n as f64);
    let nn = map.n as i32;
    let bn = map.big_n as i32;
    let lam = Complex64::from_polar(map.ln_lambda.exp(), map.phase);
    let rot = Complex64::from_polar(1.0, map.phase);
    let one = Complex64::new(1.0, 0.0);
    // psi(w) = n/m + w^N + (N/m) lambda w^{N-1} (1 + (n-1) q^{n-1}), q = lambda/(lambda+w)
    let psi = |w: Complex64| {
        let q = lam / (lam + w);
        let corr = one + (n - 1.0) * q.powi(nn - 1);
        let wn1 = w.powi(bn - 1);
        let v = n / m + wn1 * w + big / m * lam * wn1 * corr;
        let d = big * wn1 + big / m * lam * (big - 1.0) * w.powi(bn - 2) * corr
            - big / m * (n - 1.0) * (n - 1.0) * q.powi(nn) * wn1;
        (v, d)
    };
    let f = |u: Complex64| {
        let (v, d) = psi(u * rot);
        (v, d * rot, n / m)
    };
    let r0 = map.r0();
    let seeds: Vec<Complex64> =
        (1..=map.big_n).map(|j| Complex64::from_polar(r0, PI * (2 * j - 1) as f64 / big) / rot).collect();
    let mut refined = Vec::new();
    let mut residuals = Vec::new();
    for &s in &seeds {
        let (u, r) = newton(f, s)?;
        refined.push(u);
        residuals.push(r);
    }
    let ln_scale = -map.ln_lambda;
    let ln_dist: Vec<f64> = refined.iter().zip(&seeds).map(|(u, s)| (u - s).norm().ln() + ln_scale).collect();
    let ln_bound = (2.0 * big / m).ln();
    let wind = |r: f64| winding_adaptive(|w| Ok(XComplex::from_c64(psi(w).0)), Complex64::new(0.0, 0.0), r, 1024);
    let count = match (wind(2.0 * r0.max(1.0)), wind(0.5 * r0.min(1.0))) {
        (Ok(a), Ok(b)) => Some(a - b),
        _ => None,
    };
    Ok(ParabolicCluster {
        label: "ring".into(),
        center: Complex64::new(0.0, 0.0),
        ln_scale,
        within_bound: ln_dist.iter().all(|&d| d < ln_bound),
        distinct: distinct(&refined),
        predicted: seeds,
        refined,
        residuals,
        ln_dist,
        ln_bound,
        count,
    })
}

/// Critical points of `P_n` near `|z| = |b_i|`, in `u = z / |b_i|`.
fn pn_ring(map: &PnMap, i: usize) -> Result<ParabolicCluster> {
    let lb = map.ln_b[i - 1];
    let sb = lb.exp();
    let k = map.k as f64;
    let phase = map.spec.b[i - 1].phase_rad;
    let f = |u: Complex64| {
        let (v, zf, scale) = map.log_deriv(u * sb);
        (v, zf / u, scale)
    };
    let seeds: Vec<Complex64> =
        (1..=map.k).map(|j| Complex64::from_polar(1.0, phase + PI * (2 * j - 1) as f64 / k)).collect();
    let mut refined = Vec::new();
    let mut residuals = Vec::new();
    for &s in &seeds {
        let (u, r) = newton(f, s)?;
        refined.push(u);
        residuals.push(r);
    }
    let ln_dist: Vec<f64> = refined.iter().zip(&seeds).map(|(u, s)| (u - s).norm().ln() + lb).collect();
    let ln_bound = map.ln_eps() + lb;
    Ok(ParabolicCluster {
        label: format!("ring {i}"),
        center: Complex64::new(0.0, 0.0),
        ln_scale: lb,
        within_bound: ln_dist.iter().all(|&d| d < ln_bound),
        distinct: distinct(&refined),
        predicted: seeds,
        refined,
        residuals,
        ln_dist,
        ln_bound,
        count: None,
    })
}

/// Locate and refine the free critical points.
pub fn parabolic_critical(map: &ParabolicMap) -> Result<Vec<ParabolicCluster>> {
    match map {
        ParabolicMap::PLambda(p) => Ok(vec![plambda_near_minus_one(p)?, plambda_ring(p)?]),
        ParabolicMap::Pn(p) => (1..p.n as usize).map(|i| pn_ring(p, i)).collect(),
    }
}

/// Left side of the alternating-sum identity, expected to be 0.
pub fn sum_of_check(n: i64, i: i64) -> i64 {
    let alt = |j: i64| if j % 2 == 0 { 1 } else { -1 };
    let a: i64 = (1..i).map(alt).sum();
    let b: i64 = (i + 1..n).map(|j| -alt(j)).sum();
    let c = (1 - alt(n)) / 2;
    a + b + c
}

/// Step at which the orbit of `z` has stayed within `delta` of `fix` and
/// moved closer on each of `run` consecutive steps.
pub fn parabolic_convergence<M: RationalMap + ?Sized>(
    map: &M,
    z: Complex64,
    fix: Complex64,
    delta: f64,
    run: usize,
    max_iter: usize,
) -> Result<Option<usize>> {
    let mut z = z;
    let mut d = (z - fix).norm();
    let mut streak = 0;
    for k in 0..max_iter {
        let next = map.eval(z)?;
        let dn = (next - fix).norm();
        if dn < delta && dn < d {
            streak += 1;
            if streak >= run {
                return Ok(Some(k + 1));
            }
        } else {
            streak = 0;
        }
        z = next;
        d = dn;
    }
    Ok(None)
}

fn critical_value_check<M: RationalMap + ?Sized>(map: &M, geom: &Geometry, cl: &ParabolicCluster, want: Trap) -> Check {
    let pts = cl.points();
    let ok = pts.iter().all(|&w| matches!(map.eval(w), Ok(v) if geom.trap_of(v) == Some(want)));
    Check {
        name: format!("critical values of cluster '{}' in {:?} trap", cl.label, want),
        margin_log: if ok { 1.0 } else { -1.0 },
        pass: ok,
    }
}

fn cluster_checks(cl: &ParabolicCluster, expected_count: Option<i64>) -> Vec<Check> {
    let worst = cl.ln_dist.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out = vec![
        Check::new(format!("cluster '{}' within bound", cl.label), cl.ln_bound - worst),
        Check {
            name: format!("cluster '{}' points distinct", cl.label),
            margin_log: if cl.distinct { 1.0 } else { -1.0 },
            pass: cl.distinct,
        },
    ];
    if let Some(want) = expected_count {
        let ok = cl.count == Some(want);
        out.push(Check {
            name: format!("cluster '{}' holds exactly {want} critical points", cl.label),
            margin_log: if ok { 1.0 } else { -1.0 },
            pass: ok,
        });
    }
    out
}

/// Assemble fixed-point, trap, ring, critical and winding checks.
pub fn certify_parabolic(spec: &ParabolicSpec, opts: &ParabolicOptions) -> CertificationReport {
    let map = match spec.compile() {
        Ok(m) => m,
        Err(e) => {
            let mut r = CertificationReport::empty(spec_hash(spec), "parabolic", "fixed");
            r.verdict = Verdict::Failed(vec![e.to_string()]);
            return r;
        }
    };
    certify_parabolic_map(&map, opts)
}

pub fn certify_parabolic_map(map: &ParabolicMap, opts: &ParabolicOptions) -> CertificationReport {
    let mut rep = CertificationReport::empty(spec_hash(&map.spec()), map.family(), "fixed");
    let mut fails = Vec::new();
    let mut inconc = Vec::new();
    let geom = map.geometry();

    match parabolic_fixed_check(map, map.fixed_point(), Complex64::new(1.0, 0.0)) {
        Ok(fc) => {
            rep.trap_checks.push(Check::new("parabolic point is fixed", tol_margin(fc.value_residual, 1e-12)));
            rep.trap_checks.push(Check::new("parabolic multiplier is 1", tol_margin(fc.multiplier_residual, 1e-8)));
            rep.fixed_point = Some(fc);
        }
        Err(e) => inconc.push(format!("fixed point: {e}")),
    }
    match trap_checks_parabolic(map, opts) {
        Ok(c) => rep.trap_checks.extend(c),
        Err(e) => inconc.push(format!("trap sampling: {e}")),
    }

    let (ln_s, ln_big) = match &geom.inner {
        Region::Disk { ln_radius, .. } => (*ln_radius, geom.outer.ln_radius()),
        Region::Exterior { .. } => unreachable!("inner trap is a disk"),
    };
    let (expected_degrees, about) = match map {
        ParabolicMap::PLambda(p) => {
            if p.ln_lambda > p.spec.ln_lambda_max() {
                rep.notes.push("|lambda| exceeds 1/(2^(10m) n^3); no guarantee applies".into());
            }
            // ring image: |P| > R_out on the whole ring
            match ring_image_check(p, 1, p.ring(), Trap::Outer, ln_s, ln_big, opts.ring_circles, opts.samples) {
                Ok(c) => rep.ring_checks.push(c),
                Err(e) => inconc.push(format!("ring sampling: {e}")),
            }
            (vec![p.n, p.m], Complex64::new(-1.0, 0.0))
        }
        ParabolicMap::Pn(p) => {
            if p.ln_s() > p.spec.ln_s_max() {
                rep.notes.push("s exceeds 1/(25 n^2); no guarantee applies".into());
            }
            if p.spec.is_geometric() {
                let s = p.ln_s().exp();
                let n = p.n as f64;
                let e = s.powf(2.0 * n + 1.0);
                let bb = e / (3.0 * n + 3.0);
                rep.trap_checks.push(Check::new("|B_n| < s^(2n+1)/(3n+3)", bb.ln() - p.b_n.norm().ln()));
                let a = p.a_n.norm();
                let slack = e / (n + 1.0);
                rep.trap_checks
                    .push(Check::new("| |A_n| - 1 | < s^(2n+1)/(n+1)", slack.ln() - (a - 1.0).abs().max(1e-300).ln()));
            }
            for (i, ring) in p.rings() {
                let ln_r = p.ln_eps();
                match ring_image_check(p, i, ring, PnMap::ring_target(i), ln_r, 0.0, opts.ring_circles, opts.samples) {
                    Ok(c) => rep.ring_checks.push(c),
                    Err(e) => inconc.push(format!("ring sampling: {e}")),
                }
            }
            rep.ring_checks.sort_by_key(|c| c.index);
            (vec![p.n + 1; p.n as usize], p.b_n)
        }
    };

    match parabolic_critical(map) {
        Ok(clusters) => {
            for cl in &clusters {
                match (map, cl.label.as_str()) {
                    (ParabolicMap::PLambda(p), "near -1") => {
                        rep.critical_checks.extend(cluster_checks(cl, Some(p.n as i64 - 1)));
                        rep.critical_checks.push(critical_value_check(map, &geom, cl, Trap::Inner));
                    }
                    (ParabolicMap::PLambda(p), _) => {
                        rep.critical_checks.extend(cluster_checks(cl, Some(p.big_n as i64)));
                        rep.critical_checks.push(in_ring_check(cl, &p.ring()));
                        rep.critical_checks.push(critical_value_check(map, &geom, cl, Trap::Outer));
                    }
                    (ParabolicMap::Pn(p), _) => {
                        let i: usize = cl.label.trim_start_matches("ring ").parse().unwrap_or(0);
                        rep.critical_checks.extend(cluster_checks(cl, None));
                        rep.critical_checks.push(in_ring_check(cl, &p.ring(i)));
                        rep.critical_checks.push(critical_value_check(map, &geom, cl, PnMap::ring_target(i)));
                    }
                }
            }
            rep.parabolic_clusters = clusters;
        }
        Err(e) => fails.push(format!("critical refinement: {e}")),
    }

    match winding_profile(map, &geom.band_radii(), about) {
        Ok(prof) => {
            fails.extend(profile_failures(&prof, &expected_degrees, &geom.orientation));
            rep.signature = Some(extract_signature(&geom, &prof));
            rep.winding_profile = prof;
        }
        Err(e) => inconc.push(format!("winding: {e}")),
    }
    rep.geometry = Some(geom);
    rep.settle(fails, inconc);
    rep
}

fn in_ring_check(cl: &ParabolicCluster, ring: &Ring) -> Check {
    let ok = cl.refined.iter().all(|u| {
        let l = u.norm().ln() + cl.ln_scale;
        l > ring.ln_lo && l < ring.ln_hi
    });
    Check {
        name: format!("critical points of cluster '{}' inside ring", cl.label),
        margin_log: if ok { 1.0 } else { -1.0 },
        pass: ok,
    }
}

/// `per_band` radii spread evenly (in `ln r`) inside each band.
pub fn band_sample_radii(geom: &Geometry, per_band: usize) -> Vec<f64> {
    (0..geom.n)
        .flat_map(|j| {
            let (lo, hi) = geom.band_bounds(j);
            linspace(lo, hi, per_band + 2)[1..=per_band].to_vec()
        })
        .map(f64::exp)
        .collect()
}

//! Parameter synthesis from the explicit inequality budget, and the
//! log-space audit of that budget.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{reciprocal_sum_below_one, xi, FamilySpec, Param};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundTerm {
    pub name: String,
    pub ln_value: f64,
}

/// Budget quantities. Every magnitude is carried as a natural logarithm;
/// the plain fields are convenience copies that may underflow to zero.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamBudget {
    pub p: u8,
    pub degrees: Vec<u32>,
    pub xi: f64,
    #[serde(rename = "K")]
    pub k: u32,
    pub ln_s: f64,
    pub ln_u: f64,
    pub ln_v: f64,
    pub ln_a: Vec<f64>,
    pub s: f64,
    pub u: f64,
    pub v: f64,
    /// The terms whose minimum bounds `s`.
    pub s_bounds: Vec<BoundTerm>,
}

impl ParamBudget {
    pub fn ln_k(&self) -> f64 {
        (self.k as f64).ln()
    }

    pub fn ln_s_max(&self) -> f64 {
        self.s_bounds.iter().map(|b| b.ln_value).fold(f64::INFINITY, f64::min)
    }

    /// `ln` of the outer trap radius: `K` when `p = 1`, `M = (2/s)^{1/d_n}` when `p = 0`.
    pub fn ln_outer(&self) -> f64 {
        if self.p == 1 {
            self.ln_k()
        } else {
            (LN_2 - self.ln_s) / *self.degrees.last().unwrap() as f64
        }
    }

    /// `ln eps` with `eps = u^{2/K}`.
    pub fn ln_eps(&self) -> f64 {
        2.0 * self.ln_u / self.k as f64
    }
}

fn check_degrees(degrees: &[u32]) -> Result<()> {
    if degrees.len() < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {}", degrees.len())));
    }
    if degrees.iter().any(|&d| d < 2) {
        return Err(Error::Domain("degrees must be >= 2".into()));
    }
    if !reciprocal_sum_below_one(degrees) {
        return Err(Error::Domain(format!("sum of 1/d_i = {} is not < 1", xi(degrees))));
    }
    Ok(())
}

/// The terms bounding `s` from above, in log form.
pub fn s_bounds(p: u8, degrees: &[u32]) -> Vec<BoundTerm> {
    let x = xi(degrees);
    let k = *degrees.iter().max().unwrap() as f64;
    let dn = *degrees.last().unwrap() as f64;
    let t = |name: &str, v: f64| BoundTerm { name: name.into(), ln_value: v };
    if p == 1 {
        vec![t("K^(-5xi/(1-xi))", -5.0 * x / (1.0 - x) * k.ln()), t("K^(5-2K)", (5.0 - 2.0 * k) * k.ln())]
    } else {
        vec![
            t("2^(-(1-xi)^-1 (1+1/d_n-2xi/3)^-1)", -LN_2 / ((1.0 - x) * (1.0 + 1.0 / dn - 2.0 * x / 3.0))),
            t("(4K)^(-3/(1-xi))", -3.0 / (1.0 - x) * (4.0 * k).ln()),
            t("K^(-2K (1+1/d_n+2(1-xi)/3)^-1)", -2.0 * k * k.ln() / (1.0 + 1.0 / dn + 2.0 * (1.0 - x) / 3.0)),
        ]
    }
}

fn ln_uv(p: u8, degrees: &[u32], ln_s: f64) -> (f64, f64) {
    let x = xi(degrees);
    let k = *degrees.iter().max().unwrap() as f64;
    let dn = *degrees.last().unwrap() as f64;
    if p == 1 {
        (ln_s - 5.0 * k.ln(), ln_s - 2.0 * k.ln())
    } else {
        (ln_s * (1.0 + 1.0 / dn + 2.0 * (1.0 - x) / 3.0), ln_s * (1.0 / dn + (1.0 - x) / 3.0))
    }
}

/// `ln|a_{n-1}| = ln v / d_n`, then `ln|a_i| = ln u / d_{i+1} + ln|a_{i+1}|`.
fn ln_a_from(degrees: &[u32], ln_u: f64, ln_v: f64) -> Vec<f64> {
    let n = degrees.len();
    let mut out = vec![0.0; n - 1];
    out[n - 2] = ln_v / degrees[n - 1] as f64;
    for i in (0..n - 2).rev() {
        out[i] = ln_u / degrees[i + 1] as f64 + out[i + 1];
    }
    out
}

fn assemble(p: u8, degrees: &[u32], ln_s: f64, ln_u: f64, ln_v: f64, ln_a: Vec<f64>) -> ParamBudget {
    ParamBudget {
        p,
        degrees: degrees.to_vec(),
        xi: xi(degrees),
        k: *degrees.iter().max().unwrap(),
        ln_s,
        ln_u,
        ln_v,
        ln_a,
        s: ln_s.exp(),
        u: ln_u.exp(),
        v: ln_v.exp(),
        s_bounds: s_bounds(p, degrees),
    }
}

/// Budget for an arbitrary scale `s` (given as `ln s`), not clamped to the bound.
pub fn budget_from_s(p: u8, degrees: &[u32], ln_s: f64) -> Result<ParamBudget> {
    check_degrees(degrees)?;
    if p > 1 {
        return Err(Error::Domain(format!("p must be 0 or 1, got {p}")));
    }
    let (ln_u, ln_v) = ln_uv(p, degrees, ln_s);
    let ln_a = ln_a_from(degrees, ln_u, ln_v);
    Ok(assemble(p, degrees, ln_s, ln_u, ln_v, ln_a))
}

pub fn spec_from_budget(b: &ParamBudget) -> FamilySpec {
    FamilySpec::from_ln_magnitudes(b.p, &b.degrees, &b.ln_a)
}

/// Parameters at `shrink` times the largest admissible `s`.
pub fn synth(p: u8, degrees: &[u32], shrink: f64) -> Result<(FamilySpec, ParamBudget)> {
    check_degrees(degrees)?;
    if !(shrink > 0.0 && shrink <= 1.0) {
        return Err(Error::Domain(format!("shrink must lie in (0, 1], got {shrink}")));
    }
    let bound = s_bounds(p, degrees).iter().map(|b| b.ln_value).fold(f64::INFINITY, f64::min);
    let b = budget_from_s(p, degrees, bound + shrink.ln())?;
    Ok((spec_from_budget(&b), b))
}

/// Equal degrees `n+1` with `|a_{n-i}| = (n/(n+1))^{i-1} s^i`.
pub fn synth_uniform(n: usize, s: f64) -> Result<FamilySpec> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    if !(s > 0.0 && s <= 0.1) {
        return Err(Error::Domain(format!("s must lie in (0, 1/10], got {s}")));
    }
    let ratio = (n as f64 / (n as f64 + 1.0)).ln();
    let ln_a: Vec<f64> = (1..n).rev().map(|i| (i as f64 - 1.0) * ratio + i as f64 * s.ln()).collect();
    Ok(FamilySpec::from_ln_magnitudes(1, &vec![n as u32 + 1; n], &ln_a))
}

/// Reverse-engineer `(s, u, v)` from a spec's magnitudes: `v` from `|a_{n-1}|`,
/// `s` from `v`, and `u` as the largest ratio `|a_i/a_{i+1}|^{d_{i+1}}`.
pub fn fit_budget(spec: &FamilySpec) -> Result<ParamBudget> {
    check_degrees(&spec.degrees)?;
    let degrees = &spec.degrees;
    let n = degrees.len();
    let ln_a: Vec<f64> = spec.params.iter().map(Param::ln_mag).collect();
    if ln_a.len() + 1 != n {
        return Err(Error::Validation("parameter count must be n-1".into()));
    }
    let x = xi(degrees);
    let k = *degrees.iter().max().unwrap() as f64;
    let dn = degrees[n - 1] as f64;
    let ln_v = dn * ln_a[n - 2];
    let ln_s = if spec.p == 1 { ln_v + 2.0 * k.ln() } else { ln_v / (1.0 / dn + (1.0 - x) / 3.0) };
    let ln_u = if n > 2 {
        (0..n - 2).map(|i| degrees[i + 1] as f64 * (ln_a[i] - ln_a[i + 1])).fold(f64::NEG_INFINITY, f64::max)
    } else {
        ln_uv(spec.p, degrees, ln_s).0
    };
    Ok(assemble(spec.p, degrees, ln_s, ln_u, ln_v, ln_a))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AuditEntry {
    pub name: String,
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub margin_log: f64,
    pub strict: bool,
    pub pass: bool,
}

pub type AuditReport = Vec<AuditEntry>;

/// Tolerance allowed on non-strict items, which hold with equality at the bound.
pub const NONSTRICT_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
enum Rel {
    Lt,
    Le,
    Gt,
}

fn entry(name: &str, lhs: f64, rel: Rel, rhs: f64) -> AuditEntry {
    let (margin, strict) = match rel {
        Rel::Lt => (rhs - lhs, true),
        Rel::Le => (rhs - lhs, false),
        Rel::Gt => (lhs - rhs, true),
    };
    let tol = NONSTRICT_TOL * lhs.abs().max(rhs.abs()).max(1.0);
    let pass = if strict { margin > 0.0 } else { margin >= -tol };
    AuditEntry { name: name.into(), lhs_log: lhs, rhs_log: rhs, margin_log: margin, strict, pass }
}

/// Every budget inequality, evaluated on natural logarithms.
pub fn audit_budget(spec: &FamilySpec, b: &ParamBudget) -> AuditReport {
    let mut out = Vec::new();
    let ln_k = b.ln_k();
    let k = b.k as f64;
    let (s, u, v) = (b.ln_s, b.ln_u, b.ln_v);
    let la: Vec<f64> = spec.params.iter().map(Param::ln_mag).collect();
    let d1 = spec.degrees[0] as f64;
    let dn = *spec.degrees.last().unwrap() as f64;

    for t in &b.s_bounds {
        out.push(entry(&format!("s <= {}", t.name), s, Rel::Le, t.ln_value));
    }
    for i in 0..la.len().saturating_sub(1) {
        out.push(entry(&format!("|a_{}| < |a_{}|", i + 1, i + 2), la[i], Rel::Lt, la[i + 1]));
    }
    if let Some(&last) = la.last() {
        out.push(entry(&format!("|a_{}| < 1", la.len()), last, Rel::Lt, 0.0));
    }
    out.push(entry("u^(2/K) <= K^-4", 2.0 / k * u, Rel::Le, -4.0 * ln_k));
    for i in 0..la.len() {
        for j in 0..i {
            out.push(entry(
                &format!("|a_{}/a_{}| <= u^({}/K)", j + 1, i + 1, i - j),
                la[j] - la[i],
                Rel::Le,
                (i - j) as f64 / k * u,
            ));
        }
    }
    let a1 = la[0];
    if b.p == 1 {
        out.push(entry("(s/|a_1|)^d_1 < su/(2v)", d1 * (s - a1), Rel::Lt, s + u - LN_2 - v));
        out.push(entry("(|a_1|/s)^d_1 v/2 > K", d1 * (a1 - s) + v - LN_2, Rel::Gt, ln_k));
        out.push(entry("2Kv < s", LN_2 + ln_k + v, Rel::Lt, s));
        out.push(entry("v/(2Ku) > K", v - LN_2 - ln_k - u, Rel::Gt, ln_k));
    } else {
        let ln_m = (LN_2 - s) / dn;
        out.push(entry("2Ku/v < s", LN_2 + ln_k + u - v, Rel::Lt, s));
        out.push(entry("1/(2Kv) > (2/s)^(1/d_n)", -LN_2 - ln_k - v, Rel::Gt, ln_m));
        out.push(entry("(s/|a_1|)^d_1 < sv/2", d1 * (s - a1), Rel::Lt, s + v - LN_2));
        out.push(entry("sv/2 < u^(1/2)/2", s + v - LN_2, Rel::Lt, 0.5 * u - LN_2));
        out.push(entry("(|a_1|/s)^d_1 u/(2v) > (2/s)^(1/d_n)", d1 * (a1 - s) + u - LN_2 - v, Rel::Gt, ln_m));
    }
    out
}

pub fn audit_passes(r: &AuditReport) -> bool {
    r.iter().all(|e| e.pass)
}

/// Margins for the two-sided binomial estimates with `0 < eps < 1/n`:
/// `n eps < (1+eps)^n - 1 < 3 n eps` and `n eps/3 < 1 - (1-eps)^n < n eps`.
/// Entries are relative slacks; a violation shows up as a value `<= 0`.
pub fn binomial_margins(n: u32, eps: f64) -> [f64; 4] {
    let n = n as f64;
    let up = (n * eps.ln_1p()).exp_m1();
    let down = -(n * (-eps).ln_1p()).exp_m1();
    let ne = n * eps;
    [up / ne - 1.0, 1.0 - up / (3.0 * ne), 3.0 * down / ne - 1.0, 1.0 - down / ne]
}

/// For `|z - a| <= eps |a|`: slack of `|z^n - a^n| <= ((1+eps)^n - 1)|a|^n`,
/// relative to the right side.
pub fn perturbation_margin(n: u32, a: Complex64, z: Complex64, eps: f64) -> f64 {
    let lhs = (z.powu(n) - a.powu(n)).norm();
    let rhs = (n as f64 * eps.ln_1p()).exp_m1() * a.norm().powi(n as i32);
    1.0 - lhs / rhs
}

/// For `|z^n - a^n| <= eps |a|^n` with `eps < 1/2`: slacks of
/// `|a/z|^n < 1 + 2 eps` and `min_j |z - a e^{2 pi i j/n}| < eps |a|`.
pub fn root_proximity_margins(n: u32, a: Complex64, z: Complex64, eps: f64) -> [f64; 2] {
    let ratio = (a / z).norm().powi(n as i32);
    let nearest = (0..n)
        .map(|j| (z - a * Complex64::from_polar(1.0, TAU * j as f64 / n as f64)).norm())
        .fold(f64::INFINITY, f64::min);
    [1.0 - ratio / (1.0 + 2.0 * eps), 1.0 - nearest / (eps * a.norm())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_p1_444() {
        let (spec, b) = synth(1, &[4, 4, 4], 1.0).unwrap();
        let l4 = 4f64.ln();
        // independent: s = min(4^-15, 4^-3)
        assert!((b.ln_s / l4 + 15.0).abs() < 1e-12);
        assert!((b.ln_u / l4 + 20.0).abs() < 1e-12);
        assert!((b.ln_v / l4 + 17.0).abs() < 1e-12);
        assert!((b.ln_a[1] / l4 + 17.0 / 4.0).abs() < 1e-12);
        assert!((b.ln_a[0] / l4 + 5.0 + 17.0 / 4.0).abs() < 1e-12);
        assert!(spec.validate().is_empty());
        assert!(spec.params.iter().all(|p| p.phase_rad == 0.0));
    }

    #[test]
    fn synth_two_bands() {
        let (spec, b) = synth(1, &[2, 3], 1.0).unwrap();
        assert_eq!(spec.params.len(), 1);
        assert!((spec.params[0].ln_mag() - b.ln_v / 3.0).abs() < 1e-15);
    }

    #[test]
    fn synth_rejects() {
        assert!(synth(1, &[3, 3, 3], 1.0).is_err());
        assert!(synth(1, &[4, 4], 0.0).is_err());
        assert!(synth(1, &[4, 4], 1.5).is_err());
        assert!(synth(2, &[4, 4], 1.0).is_err());
    }

    #[test]
    fn p0_bounds_three_terms() {
        let t = s_bounds(0, &[4, 4, 4]);
        assert_eq!(t.len(), 3);
        // independent evaluation: xi = 3/4, K = 4, d_n = 4
        let x: f64 = 0.75;
        let e1 = -(2f64.ln()) / ((1.0 - x) * (1.0 + 0.25 - 0.5));
        let e2 = -3.0 / 0.25 * 16f64.ln();
        let e3 = -8.0 * 4f64.ln() / (1.0 + 0.25 + 2.0 * 0.25 / 3.0);
        for (got, want) in t.iter().zip([e1, e2, e3]) {
            assert!((got.ln_value - want).abs() < 1e-12 * want.abs());
        }
    }

    #[test]
    fn uniform_magnitudes() {
        let s = synth_uniform(2, 0.1).unwrap();
        assert_eq!(s.degrees, vec![3, 3]);
        assert!((s.params[0].ln_mag().exp() - 0.1).abs() < 1e-15);
        let s = synth_uniform(3, 0.1).unwrap();
        assert!((s.params[1].ln_mag().exp() - 0.1).abs() < 1e-15);
        assert!((s.params[0].ln_mag().exp() - 0.0075).abs() < 1e-15);
        let s = synth_uniform(4, 0.1).unwrap();
        assert!(s.validate().is_empty());
        assert!(synth_uniform(3, 0.2).is_err());
    }

    #[test]
    fn audit_synth_and_inflated() {
        let (spec, b) = synth(1, &[4, 4, 4], 1.0).unwrap();
        let r = audit_budget(&spec, &b);
        assert!(audit_passes(&r), "{r:#?}");
        let e = r.iter().find(|e| e.name == "u^(2/K) <= K^-4").unwrap();
        assert!((e.lhs_log - 0.5 * b.ln_u).abs() < 1e-12);
        let big = budget_from_s(1, &[4, 4, 4], b.ln_s + 10f64.ln()).unwrap();
        let r = audit_budget(&spec_from_budget(&big), &big);
        assert!(r.iter().any(|e| !e.pass && e.margin_log < 0.0));
    }

    #[test]
    fn fit_recovers_synth() {
        for p in [0, 1] {
            let (spec, b) = synth(p, &[4, 5, 6], 0.5).unwrap();
            let f = fit_budget(&spec).unwrap();
            assert!((f.ln_s - b.ln_s).abs() < 1e-9 * b.ln_s.abs());
            assert!((f.ln_u - b.ln_u).abs() < 1e-9 * b.ln_u.abs());
        }
    }

    #[test]
    fn binomial_example() {
        assert!(binomial_margins(5, 0.1).iter().all(|&m| m > 0.0));
        assert!(perturbation_margin(3, Complex64::new(1.0, 0.0), Complex64::new(1.05, 0.0), 0.1) > 0.0);
    }
}

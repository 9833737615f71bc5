//! Critical points of the hyperbolic family: predicted ring positions,
//! Newton refinement on the logarithmic derivative, and an independent
//! polynomial enumeration used as an oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyMap;
use crate::maps::RationalMap;
use crate::numerics::poly::{binomial, monomial, poly_add, poly_mul, poly_scale, roots, Poly};
use crate::numerics::XComplex;

pub const NEWTON_TOL: f64 = 1e-9;
pub const NEWTON_MAX_STEPS: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalCluster {
    /// `i` in `1..n-1`
    pub ring_index: usize,
    pub r_i: f64,
    pub ln_abs_a: f64,
    pub ln_eps: f64,
    pub predicted: Vec<Complex64>,
    pub refined: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// `ln(|w - w~| / |a_i|)` per point, resolved below double precision;
    /// an exact prediction gives `-inf`, written as `null`
    #[serde(default, with = "ln_list")]
    pub ln_offset: Vec<f64>,
    /// `eps |a_i|`
    pub bound: f64,
    /// largest `|refined - predicted| / bound`
    pub worst_ratio: f64,
    pub within_bound: bool,
    pub distinct: bool,
    pub in_annulus: bool,
}

impl CriticalCluster {
    /// `((min(r,1) - 2 eps)|a_i|, (max(r,1) + 2 eps)|a_i|)`
    pub fn annulus(&self) -> (f64, f64) {
        let eps = self.ln_eps.exp();
        let a = self.ln_abs_a.exp();
        ((self.r_i.min(1.0) - 2.0 * eps) * a, (self.r_i.max(1.0) + 2.0 * eps) * a)
    }
}

/// `w_{i,j} = r_i a_i exp(i pi (2j-1)/D_i)` with `r_i = (d_i/d_{i+1})^{1/D_i}`.
pub fn predicted(map: &FamilyMap, ln_eps: f64) -> Vec<CriticalCluster> {
    (0..map.n - 1)
        .map(|i| {
            let dd = map.big_d[i];
            let r = (map.d[i] as f64 / map.d[i + 1] as f64).powf(1.0 / dd as f64);
            let ln_a = map.ln_a[i];
            let mag = r * ln_a.exp();
            let ph = map.spec.params[i].phase_rad;
            let pts = (1..=dd).map(|j| Complex64::from_polar(mag, ph + PI * (2 * j - 1) as f64 / dd as f64)).collect();
            CriticalCluster {
                ring_index: i + 1,
                r_i: r,
                ln_abs_a: ln_a,
                ln_eps,
                predicted: pts,
                refined: Vec::new(),
                residuals: Vec::new(),
                ln_offset: Vec::new(),
                bound: (ln_eps + ln_a).exp(),
                worst_ratio: f64::NAN,
                within_bound: false,
                distinct: false,
                in_annulus: false,
            }
        })
        .collect()
}

/// Newton on the log-derivative with the multiplicative step `z(1 - F/G)`,
/// confined to `lo < |z| < hi`.
pub fn newton_log_deriv(map: &FamilyMap, seed: Complex64, lo: f64, hi: f64) -> Result<(Complex64, f64)> {
    let mut z = seed;
    for _ in 0..NEWTON_MAX_STEPS {
        let (f, g) = map.log_deriv_pair(z)?;
        let mut step = f / g;
        if !step.is_finite() {
            return Err(Error::Convergence(format!("degenerate derivative from seed {seed}")));
        }
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        z *= Complex64::new(1.0, 0.0) - step;
        let r = z.norm();
        if !(r > lo && r < hi) {
            return Err(Error::Convergence(format!("iterate left its ring from seed {seed}")));
        }
        if step.norm() < 1e-15 {
            let res = map.eval_log_deriv(z)?.norm();
            if res < NEWTON_TOL {
                return Ok((z, res));
            }
        }
    }
    let res = map.eval_log_deriv(z)?.norm();
    if res < NEWTON_TOL {
        return Ok((z, res));
    }
    Err(Error::Convergence(format!("seed {seed} did not converge (residual {res:e})")))
}

mod ln_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.is_finite().then_some(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

/// Relative offsets above this are read off the refined points directly.
pub const RESOLVED_OFFSET: f64 = 1e-10;

fn ln1p_c(x: Complex64) -> Complex64 {
    if x.norm() < 1e-5 {
        x - x * x / 2.0 + x * x * x / 3.0
    } else {
        (1.0 + x).ln()
    }
}

/// `ln(|w - w~| / |a_i|)` for the critical point `w` next to the prediction
/// `w~` on ring `ring` (0-based). Near that ring the critical equation reads
/// `S + s D / (1 - q) + rho = 0` with `q = a^D / z^D`; the prediction solves
/// it with `rho = 0`. The remainder `rho` from the other factors is formed
/// in extended range, so offsets far below double resolution stay
/// measurable. First order in `rho`.
pub fn ln_offset(map: &FamilyMap, ring: usize, w_pred: Complex64) -> Result<f64> {
    let n = map.n as i64;
    let sgn = |k: i64| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let zx = XComplex::from_c64(w_pred);
    let mut s = sgn(n) * map.d[0] as f64;
    let mut rho = XComplex::ZERO;
    for j in 0..map.n - 1 {
        let sd = sgn(n - j as i64 - 1) * map.big_d[j] as f64;
        if j < ring {
            // 1/(1-q) = 1 + q/(1-q) with q tiny
            s += sd;
            let q = map.c[j] / zx.powi(map.big_d[j]);
            rho = rho + q * XComplex::from_c64(Complex64::new(sd, 0.0) / (1.0 - q.to_c64()));
        } else if j > ring {
            // 1/(1-q) = -p/(1-p) with p = 1/q tiny
            let p = zx.powi(map.big_d[j]) / map.c[j];
            rho = rho + p * XComplex::from_c64(Complex64::new(-sd, 0.0) / (1.0 - p.to_c64()));
        }
    }
    if rho.is_zero() {
        return Ok(f64::NEG_INFINITY);
    }
    let sd = sgn(n - ring as i64 - 1) * map.big_d[ring] as f64;
    let dd = map.big_d[ring] as f64;
    let ln_w = w_pred.norm().ln() - map.ln_a[ring];
    if rho.ln_abs() < -30.0 {
        // ln(q/q~) = rho (1/(S + sD) - 1/S) and |w/w~ - 1| = |ln(q/q~)| / D
        let k = (1.0 / (s + sd) - 1.0 / s).abs();
        return Ok(ln_w + rho.ln_abs() + k.ln() - dd.ln());
    }
    let r = rho.to_c64();
    let l = ln1p_c(r / (s + sd)) - ln1p_c(r / s);
    let delta = (-l / dd).exp() - 1.0;
    Ok(ln_w + delta.norm().ln())
}

/// Refine every seed. Each cluster's iterates must stay between the
/// geometric midpoints to the neighboring parameter circles.
pub fn refine(map: &FamilyMap, clusters: &[CriticalCluster]) -> Result<Vec<CriticalCluster>> {
    let m = map.n - 1;
    let mut out = clusters.to_vec();
    for c in out.iter_mut() {
        let i = c.ring_index - 1;
        let lo = if i == 0 { map.ln_a[0] - 20.0 } else { 0.5 * (map.ln_a[i - 1] + map.ln_a[i]) };
        let hi = if i + 1 == m { map.ln_a[i] + 20.0 } else { 0.5 * (map.ln_a[i] + map.ln_a[i + 1]) };
        let (lo, hi) = (lo.exp(), hi.exp());
        let res: Vec<(Complex64, f64)> =
            c.predicted.par_iter().map(|&w| newton_log_deriv(map, w, lo, hi)).collect::<Result<_>>()?;
        c.refined = res.iter().map(|x| x.0).collect();
        c.residuals = res.iter().map(|x| x.1).collect();
        c.ln_offset = c
            .refined
            .iter()
            .zip(&c.predicted)
            .map(|(w, p)| {
                let measured = (w - p).norm() / c.ln_abs_a.exp();
                if measured > RESOLVED_OFFSET {
                    Ok(measured.ln())
                } else {
                    ln_offset(map, i, *p)
                }
            })
            .collect::<Result<_>>()?;
        c.worst_ratio = c.ln_offset.iter().map(|l| (l - c.ln_eps).exp()).fold(0.0, f64::max);
        c.within_bound = c.worst_ratio < 1.0;
        let mut sep = f64::INFINITY;
        for a in 0..c.refined.len() {
            for b in 0..a {
                sep = sep.min((c.refined[a] - c.refined[b]).norm());
            }
        }
        c.distinct = sep > c.bound;
        // |w~| = r_i |a_i| sits inside the annulus with room 2 eps |a_i| on
        // each side, so an offset below that keeps w inside without
        // comparing radii that double precision cannot separate
        c.in_annulus = c.ln_offset.iter().all(|&l| l < c.ln_eps + std::f64::consts::LN_2);
    }
    Ok(out)
}

pub fn predicted_and_refined(map: &FamilyMap, ln_eps: f64) -> Result<Vec<CriticalCluster>> {
    refine(map, &predicted(map, ln_eps))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRoots {
    pub free: Vec<Complex64>,
    pub zero_multiplicity: usize,
    pub infinity_multiplicity: usize,
}

impl OracleRoots {
    pub fn total(&self) -> usize {
        self.free.len() + self.zero_multiplicity + self.infinity_multiplicity
    }
}

fn scaled_constants(map: &FamilyMap) -> Result<(f64, Vec<Complex64>)> {
    let ln_r = *map.ln_a.last().unwrap();
    let mut out = Vec::new();
    for (i, c) in map.c.iter().enumerate() {
        let cs = *c / XComplex::from_polar(ln_r * map.big_d[i] as f64, 0.0);
        if cs.ln_abs() < -700.0 {
            return Err(Error::Scale(format!(
                "a_{}^{} / |a_{}|^{} = e^{:.0} underflows; use the log-space refinement instead",
                i + 1,
                map.big_d[i],
                map.n - 1,
                map.big_d[i],
                cs.ln_abs()
            )));
        }
        out.push(cs.to_c64());
    }
    Ok((ln_r, out))
}

fn check_size(map: &FamilyMap) -> Result<()> {
    if map.degree() > 60 {
        return Err(Error::Scale(format!("degree {} exceeds 60", map.degree())));
    }
    Ok(())
}

/// Roots of the expanded numerator of `f'`, found by simultaneous iteration
/// after rescaling `z = |a_{n-1}| zeta`. The points `0` and `infinity` carry
/// multiplicities `d_1 - 1` and `d_n - 1`.
pub fn oracle_all_critical(map: &FamilyMap) -> Result<OracleRoots> {
    check_size(map)?;
    let (ln_r, cs) = scaled_constants(map)?;
    let m = map.n - 1;
    let factors: Vec<Poly> = (0..m).map(|i| binomial(map.big_d[i] as usize, cs[i])).collect();
    let prod_except = |skip: Option<usize>| {
        let mut p = vec![Complex64::new(1.0, 0.0)];
        for (i, f) in factors.iter().enumerate() {
            if Some(i) != skip {
                p = poly_mul(&p, f);
            }
        }
        p
    };
    let mut num = poly_scale(&prod_except(None), Complex64::new((map.e0 * map.d[0]) as f64, 0.0));
    for i in 0..m {
        let term = poly_mul(
            &monomial(map.big_d[i] as usize, Complex64::new((map.e[i] * map.big_d[i]) as f64, 0.0)),
            &prod_except(Some(i)),
        );
        num = poly_add(&num, &term);
    }
    let r = ln_r.exp();
    let free = roots(&num)?.into_iter().map(|z| z * r).collect();
    Ok(OracleRoots {
        free,
        zero_multiplicity: map.d[0] as usize - 1,
        infinity_multiplicity: map.d[map.n - 1] as usize - 1,
    })
}

/// Number of solutions of `f(z) = w`, counted from the roots of the
/// numerator of `f - w` that satisfy the equation to relative accuracy 1e-6.
pub fn preimage_count(map: &FamilyMap, w: Complex64) -> Result<usize> {
    check_size(map)?;
    let (ln_r, cs) = scaled_constants(map)?;
    let lead = map.lead_exp();
    let mut top = monomial(lead.max(0) as usize, Complex64::new(1.0, 0.0));
    let mut bot = monomial((-lead).max(0) as usize, Complex64::new(1.0, 0.0));
    for i in 0..map.n - 1 {
        let b = binomial(map.big_d[i] as usize, cs[i]);
        if map.e[i] > 0 {
            top = poly_mul(&top, &b);
        } else {
            bot = poly_mul(&bot, &b);
        }
    }
    // f(R zeta) = R^{deg top - deg bot} top(zeta)/bot(zeta)
    let shift = (top.len() as i64 - bot.len() as i64) as f64 * ln_r;
    let wz = XComplex::from_c64(w) / XComplex::from_polar(shift, 0.0);
    let wz = wz.to_c64();
    let num = poly_add(&top, &poly_scale(&bot, -wz));
    let r = ln_r.exp();
    let found = roots(&num)?;
    Ok(found
        .into_iter()
        .map(|z| z * r)
        .filter(|&z| match map.eval(z) {
            Ok(v) => (v - w).norm() <= 1e-6 * w.norm(),
            Err(_) => false,
        })
        .count())
}

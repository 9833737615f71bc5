//! Dense complex polynomials (ascending coefficients) and an Aberth-Ehrlich
//! simultaneous root finder seeded from the Newton polygon.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Poly = Vec<Complex64>;

pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[Complex64], b: &[Complex64]) -> Poly {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

pub fn poly_scale(a: &[Complex64], k: Complex64) -> Poly {
    a.iter().map(|x| x * k).collect()
}

/// `x^k - c`
pub fn binomial(k: usize, c: Complex64) -> Poly {
    let mut p = vec![Complex64::new(0.0, 0.0); k + 1];
    p[0] = -c;
    p[k] += Complex64::new(1.0, 0.0);
    p
}

pub fn monomial(k: usize, c: Complex64) -> Poly {
    let mut p = vec![Complex64::new(0.0, 0.0); k + 1];
    p[k] = c;
    p
}

pub fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().map_or(false, |c| c.norm() == 0.0) {
        p.pop();
    }
    p
}

pub fn horner(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// `p(z) / p'(z)`, evaluated on the reversed polynomial outside the unit disk.
fn newton_ratio(p: &[Complex64], z: Complex64) -> Complex64 {
    let d = p.len() - 1;
    if z.norm() <= 1.0 {
        let (mut v, mut dv) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in p.iter().rev() {
            dv = dv * z + v;
            v = v * z + c;
        }
        v / dv
    } else {
        let w = z.inv();
        let (mut q, mut dq) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in p.iter() {
            dq = dq * w + q;
            q = q * w + c;
        }
        z * q / (q * d as f64 - w * dq)
    }
}

/// Initial radii from the upper convex hull of `(k, ln|c_k|)`.
fn initial_guesses(p: &[Complex64]) -> Vec<Complex64> {
    let d = p.len() - 1;
    let pts: Vec<(usize, f64)> =
        p.iter().enumerate().filter(|(_, c)| c.norm() > 0.0).map(|(k, c)| (k, c.norm().ln())).collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = Vec::with_capacity(d);
    for w in hull.windows(2) {
        let (ka, la) = w[0];
        let (kb, lb) = w[1];
        let m = kb - ka;
        let r = ((la - lb) / m as f64).exp();
        for j in 0..m {
            let th = TAU * j as f64 / m as f64 + 0.4 + 0.1 * out.len() as f64;
            out.push(Complex64::from_polar(r, th));
        }
    }
    out
}

/// All roots of a polynomial with nonzero constant term.
pub fn roots(p: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = trim(p.to_vec());
    let d = p.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    if p[0].norm() == 0.0 {
        return Err(Error::Domain("constant term vanishes; deflate zero roots first".into()));
    }
    let mut z = initial_guesses(&p);
    let mut done = vec![false; d];
    for _ in 0..2000 {
        let mut moved = false;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let ratio = newton_ratio(&p, z[i]);
            let sum: Complex64 = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !w.is_finite() {
                continue;
            }
            z[i] -= w;
            if w.norm() <= 4.0 * f64::EPSILON * z[i].norm() {
                done[i] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            return Ok(z);
        }
    }
    Err(Error::Convergence(format!("Aberth iteration on degree {d} did not settle")))
}

//! Orbit classification, itineraries over the `n` bands, and radial location
//! of Julia components by itinerary prefix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certify::Geometry;
use crate::error::{Error, Result};
use crate::family::Trap;
use crate::maps::RationalMap;

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const LOCATE_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Basin0,
    BasinInfinity,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub outcome: Outcome,
    pub steps: usize,
    /// band symbols visited before entering a trap
    pub itinerary: Vec<u8>,
    /// the trap the orbit entered first, if any
    pub entered: Option<Trap>,
}

/// Final basin for an orbit that entered `t`: the trap itself if invariant,
/// else its image if that is invariant; a 2-cycle keeps the entered trap.
pub fn basin_label(geom: &Geometry, t: Trap) -> Trap {
    let next = geom.maps_to(t);
    if next == t || geom.maps_to(next) == next {
        next
    } else {
        t
    }
}

fn outcome_of(t: Trap) -> Outcome {
    match t {
        Trap::Inner => Outcome::Basin0,
        Trap::Outer => Outcome::BasinInfinity,
    }
}

/// One step of the orbit. Poles and overflow become infinity.
fn step<M: RationalMap + ?Sized>(map: &M, z: Complex64) -> Result<Complex64> {
    match map.eval(z) {
        Ok(v) if v.re.is_nan() || v.im.is_nan() => Ok(Complex64::new(f64::INFINITY, 0.0)),
        Ok(v) => Ok(v),
        Err(Error::Pole(_)) => Ok(Complex64::new(f64::INFINITY, 0.0)),
        Err(e) => Err(e),
    }
}

pub fn classify<M: RationalMap + ?Sized>(
    map: &M,
    geom: &Geometry,
    z: Complex64,
    max_iter: usize,
) -> Result<OrbitClass> {
    if let Err(Error::Pole(m)) = map.eval_x(z) {
        if geom.trap_of(z).is_none() {
            return Err(Error::Pole(m));
        }
    }
    let mut z = z;
    let mut itin = Vec::new();
    for k in 0..=max_iter {
        if let Some(t) = geom.trap_of(z) {
            return Ok(OrbitClass {
                outcome: outcome_of(basin_label(geom, t)),
                steps: k,
                itinerary: itin,
                entered: Some(t),
            });
        }
        if k == max_iter {
            break;
        }
        itin.push(geom.band(z) as u8);
        z = step(map, z)?;
    }
    Ok(OrbitClass { outcome: Outcome::Undecided, steps: max_iter, itinerary: itin, entered: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Itinerary {
    Symbols { symbols: Vec<u8> },
    Escaped { step: usize, trap: Trap },
}

/// The first `length` band symbols, or the step at which the orbit entered
/// a trap. A ring counts as its image trap, one step early.
pub fn itinerary<M: RationalMap + ?Sized>(map: &M, geom: &Geometry, z: Complex64, length: usize) -> Result<Itinerary> {
    let mut z = z;
    let mut out = Vec::with_capacity(length);
    for k in 0..length {
        if let Some(t) = geom.trap_of(z) {
            return Ok(Itinerary::Escaped { step: k, trap: t });
        }
        if let Some(j) = geom.ring_of(z) {
            return Ok(Itinerary::Escaped { step: k, trap: geom.ring_maps_to[j] });
        }
        out.push(geom.band(z) as u8);
        if k + 1 < length {
            z = step(map, z)?;
        }
    }
    Ok(Itinerary::Symbols { symbols: out })
}

/// Radial position of the orbit of `z` relative to `prefix`: `0` if the
/// prefix is realized, otherwise `+1` when `z` lies outward of the
/// component and `-1` when inward. The sign at the first mismatch is
/// corrected by the band orientations already traversed.
pub fn radial_side<M: RationalMap + ?Sized>(map: &M, geom: &Geometry, z: Complex64, prefix: &[u8]) -> Result<i32> {
    // positions doubled so ring j sits between bands j and j+1
    let n = geom.n as i64;
    let mut z = z;
    let mut flip = 1i64;
    for (k, &sym) in prefix.iter().enumerate() {
        let actual = match (geom.trap_of(z), geom.ring_of(z)) {
            (Some(Trap::Inner), _) => -2,
            (Some(Trap::Outer), _) => 2 * n,
            (None, Some(j)) => 2 * j as i64 + 1,
            (None, None) => 2 * geom.band(z) as i64,
        };
        let want = 2 * sym as i64;
        if actual != want {
            return Ok(((actual - want).signum() * flip) as i32);
        }
        flip *= geom.orientation[sym as usize];
        if k + 1 < prefix.len() {
            z = step(map, z)?;
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusInterval {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl RadiusInterval {
    pub fn mid(&self) -> f64 {
        (self.r_lo * self.r_hi).sqrt()
    }

    pub fn contains(&self, other: &RadiusInterval, tol: f64) -> bool {
        other.r_lo >= self.r_lo * (1.0 - tol) && other.r_hi <= self.r_hi * (1.0 + tol)
    }
}

const EDGE_STEPS: usize = 60;

/// Interval on the ray at `angle` whose points realize `prefix`, narrowed
/// one symbol at a time and finished by bisecting both edges in `ln r`.
pub fn locate_component<M: RationalMap + ?Sized>(
    map: &M,
    geom: &Geometry,
    prefix: &[u8],
    angle: f64,
) -> Result<RadiusInterval> {
    if prefix.is_empty() || prefix.iter().any(|&s| s as usize >= geom.n) {
        return Err(Error::Validation(format!("prefix {prefix:?} is not over {} symbols", geom.n)));
    }
    let dir = Complex64::from_polar(1.0, angle);
    let at = |l: f64| dir * l.exp();
    let (mut lo, _) = geom.band_bounds(0);
    let (_, mut hi) = geom.band_bounds(geom.n - 1);
    for k in 1..=prefix.len() {
        let pre = &prefix[..k];
        let h = |l: f64| radial_side(map, geom, at(l), pre);
        // a point of the component inside (lo, hi)
        let (mut a, mut b) = (lo, hi);
        let mut inside = None;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            match h(m)? {
                0 => {
                    inside = Some(m);
                    break;
                }
                s if s > 0 => b = m,
                _ => a = m,
            }
            if b - a < 1e-15 * a.abs().max(1.0) {
                break;
            }
        }
        let Some(c) = inside else {
            return Err(Error::NotBracketed(format!("prefix {pre:?} at angle {angle}")));
        };
        let (mut l0, mut l1) = (lo, c);
        for _ in 0..EDGE_STEPS {
            let m = 0.5 * (l0 + l1);
            if h(m)? == 0 {
                l1 = m;
            } else {
                l0 = m;
            }
            if l1 - l0 < 1e-12 {
                break;
            }
        }
        let (mut u0, mut u1) = (c, hi);
        for _ in 0..EDGE_STEPS {
            let m = 0.5 * (u0 + u1);
            if h(m)? == 0 {
                u0 = m;
            } else {
                u1 = m;
            }
            if u1 - u0 < 1e-12 {
                break;
            }
        }
        lo = l1;
        hi = u0;
    }
    Ok(RadiusInterval { r_lo: lo.exp(), r_hi: hi.exp() })
}

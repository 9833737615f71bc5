//! Circle sampling and argument-principle winding numbers.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::xcomplex::XComplex;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 4096;
pub const MAX_SAMPLES: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct CircleSamples {
    pub center: Complex64,
    pub radius: f64,
    pub values: Vec<XComplex>,
}

impl CircleSamples {
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Points `center + radius * e^{2 pi i k / count}`, `k = 0..count`.
pub fn circle_points(center: Complex64, radius: f64, count: usize) -> Vec<Complex64> {
    (0..count).map(|k| center + Complex64::from_polar(radius, TAU * k as f64 / count as f64)).collect()
}

/// Evaluate `f` around a circle. Pole hits are reported as a resolution
/// problem so callers resample instead of treating them as a verdict.
pub fn sample_circle<F>(f: F, center: Complex64, radius: f64, count: usize) -> Result<CircleSamples>
where
    F: Fn(Complex64) -> Result<XComplex> + Sync,
{
    if count < 64 || !count.is_power_of_two() {
        return Err(Error::Validation(format!("sample count {count} must be a power of two >= 64")));
    }
    let values = circle_points(center, radius, count)
        .into_par_iter()
        .map(|z| match f(z) {
            Ok(v) => Ok(v),
            Err(Error::Pole(m)) => Err(Error::Resolution(format!("sample at {z} hit a pole ({m})"))),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CircleSamples { center, radius, values })
}

/// Total argument change divided by 2 pi, by nearest-branch unwrapping.
pub fn winding_number(samples: &CircleSamples) -> Result<i64> {
    let v = &samples.values;
    if v.len() < 2 {
        return Err(Error::Resolution("too few samples".into()));
    }
    let mut total = 0.0;
    let mut prev = None;
    for (k, s) in v.iter().chain(std::iter::once(&v[0])).enumerate() {
        if s.is_zero() || !s.is_finite() {
            return Err(Error::Resolution(format!("sample {k} is zero or non-finite")));
        }
        let a = s.arg();
        if let Some(p) = prev {
            let mut d: f64 = a - p;
            d -= TAU * (d / TAU).round();
            if d.abs() >= FRAC_PI_2 {
                return Err(Error::Resolution(format!("argument jump {d:.3} at sample {k}")));
            }
            total += d;
        }
        prev = Some(a);
    }
    Ok((total / TAU).round() as i64)
}

/// Winding number with automatic doubling of the sample count.
pub fn winding_adaptive<F>(f: F, center: Complex64, radius: f64, start: usize) -> Result<i64>
where
    F: Fn(Complex64) -> Result<XComplex> + Sync,
{
    let mut count = start.max(64).next_power_of_two();
    loop {
        let res = sample_circle(&f, center, radius, count).and_then(|s| winding_number(&s));
        match res {
            Err(Error::Resolution(m)) => {
                count *= 2;
                if count > MAX_SAMPLES {
                    return Err(Error::Resolution(format!(
                        "gave up at radius {radius:e} after {MAX_SAMPLES} samples: {m}"
                    )));
                }
            }
            other => return other,
        }
    }
}

/// Maximum and minimum of `ln|f|` over a circle, pole-safe.
pub fn ln_abs_extrema<F>(f: F, center: Complex64, radius: f64, count: usize) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Result<XComplex> + Sync,
{
    let s = sample_circle(f, center, radius, count)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &s.values {
        let l = v.ln_abs();
        if l.is_nan() {
            return Err(Error::Resolution("NaN sample".into()));
        }
        lo = lo.min(l);
        hi = hi.max(l);
    }
    Ok((lo, hi))
}

/// Equally spaced values in `[a, b]` (inclusive), `k >= 2`.
pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k < 2 {
        return vec![0.5 * (a + b)];
    }
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

/// Angle of `z` in `[0, 2 pi)`.
pub fn angle_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow(k: i64) -> impl Fn(Complex64) -> Result<XComplex> + Sync {
        move |z| Ok(XComplex::from_c64(z).powi(k))
    }

    #[test]
    fn monomials() {
        let s = sample_circle(pow(3), Complex64::new(0.0, 0.0), 1.0, 4096).unwrap();
        assert_eq!(winding_number(&s).unwrap(), 3);
        let s = sample_circle(pow(-2), Complex64::new(0.0, 0.0), 7.5, 64).unwrap();
        assert_eq!(winding_number(&s).unwrap(), -2);
    }

    #[test]
    fn coarse_sampling_signals_resolution() {
        let s = sample_circle(pow(40), Complex64::new(0.0, 0.0), 1.0, 64).unwrap();
        assert!(matches!(winding_number(&s), Err(Error::Resolution(_))));
        assert_eq!(winding_adaptive(pow(40), Complex64::new(0.0, 0.0), 1.0, 64).unwrap(), 40);
    }

    #[test]
    fn zero_sample_rejected() {
        let f = |z: Complex64| Ok(XComplex::from_c64(z - 1.0));
        let s = sample_circle(f, Complex64::new(0.0, 0.0), 1.0, 64).unwrap();
        assert!(matches!(winding_number(&s), Err(Error::Resolution(_))));
    }

    #[test]
    fn bad_count_rejected() {
        assert!(sample_circle(pow(1), Complex64::new(0.0, 0.0), 1.0, 100).is_err());
        assert!(sample_circle(pow(1), Complex64::new(0.0, 0.0), 1.0, 32).is_err());
    }

    #[test]
    fn offset_center() {
        let f = |z: Complex64| Ok(XComplex::from_c64((z - 2.0) * (z - 2.1) / (z + 5.0)));
        assert_eq!(winding_adaptive(f, Complex64::new(2.0, 0.0), 0.5, 64).unwrap(), 2);
    }
}

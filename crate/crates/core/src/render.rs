//! Raster images of basins, escape times and itinerary prefixes, written
//! as binary PPM.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::Geometry;
use crate::dynamics::{classify, itinerary, Itinerary};
use crate::error::{Error, Result};
use crate::family::Trap;
use crate::maps::RationalMap;

pub const MAX_SIDE: u32 = 8192;
pub const MAX_DEPTH: u32 = 6;
pub const MAX_HUES: usize = 4096;

pub const INNER_RGB: [u8; 3] = [128, 128, 128];
pub const OUTER_RGB: [u8; 3] = [255, 255, 255];
pub const JULIA_RGB: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RenderMode {
    Escape,
    Basin,
    Itinerary { depth: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderJob {
    pub center: Complex64,
    pub half_width: f64,
    pub width: u32,
    pub height: u32,
    pub mode: RenderMode,
    pub max_iter: usize,
}

impl RenderJob {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width > MAX_SIDE || self.height > MAX_SIDE {
            return Err(Error::Validation(format!("resolution {}x{} outside 1..={MAX_SIDE}", self.width, self.height)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) || !self.center.is_finite() {
            return Err(Error::Validation("viewport must be finite with positive half-width".into()));
        }
        if let RenderMode::Itinerary { depth } = self.mode {
            if depth == 0 || depth > MAX_DEPTH {
                return Err(Error::Validation(format!("itinerary depth {depth} outside 1..={MAX_DEPTH}")));
            }
            if (n as f64).powi(depth as i32) > MAX_HUES as f64 {
                return Err(Error::Validation(format!("{n}^{depth} prefixes exceed {MAX_HUES} colors")));
            }
        }
        Ok(())
    }

    /// Center of pixel `(i, j)`, column `i` from the left, row `j` from the top.
    pub fn pixel_center(&self, i: u32, j: u32) -> Complex64 {
        let (w, h) = (self.width as f64, self.height as f64);
        let hw = self.half_width;
        let x = self.center.re + hw * ((2 * i + 1) as f64 / w - 1.0);
        let y = self.center.im + hw * (h / w) * (1.0 - (2 * j + 1) as f64 / h);
        Complex64::new(x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// RGB triples, rows top to bottom
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, i: u32, j: u32) -> [u8; 3] {
        let k = 3 * (j as usize * self.width as usize + i as usize);
        [self.rgb[k], self.rgb[k + 1], self.rgb[k + 2]]
    }

    pub fn ppm_header(&self) -> String {
        format!("P6\n{} {}\n255\n", self.width, self.height)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = self.ppm_header().into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_ppm())
    }
}

fn trap_rgb(t: Trap) -> [u8; 3] {
    match t {
        Trap::Inner => INNER_RGB,
        Trap::Outer => OUTER_RGB,
    }
}

/// Fully saturated-ish hue wheel, `k` of `count`.
fn hue(k: usize, count: usize) -> [u8; 3] {
    let h = 6.0 * k as f64 / count as f64;
    let (s, v) = (0.85, 0.95);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |t: f64| ((t + m) * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

fn pixel_rgb<M: RationalMap + ?Sized>(map: &M, geom: &Geometry, job: &RenderJob, z: Complex64) -> [u8; 3] {
    match job.mode {
        RenderMode::Basin => match classify(map, geom, z, job.max_iter) {
            Ok(c) => c.entered.map(trap_rgb).unwrap_or(JULIA_RGB),
            Err(_) => JULIA_RGB,
        },
        RenderMode::Escape => match classify(map, geom, z, job.max_iter) {
            Ok(c) if c.entered.is_some() => {
                let f = (1.0 + c.steps as f64).ln() / (1.0 + job.max_iter as f64).ln();
                let v = (255.0 * (1.0 - f)).round().clamp(16.0, 255.0) as u8;
                [v, v, v]
            }
            _ => JULIA_RGB,
        },
        RenderMode::Itinerary { depth } => match itinerary(map, geom, z, depth as usize) {
            Ok(Itinerary::Symbols { symbols }) => {
                let idx = symbols.iter().fold(0usize, |acc, &s| acc * geom.n + s as usize);
                hue(idx, geom.n.pow(depth))
            }
            Ok(Itinerary::Escaped { trap, .. }) => trap_rgb(trap),
            Err(_) => JULIA_RGB,
        },
    }
}

/// Classify every pixel. Rows are computed in parallel and assembled by
/// index, so the output does not depend on scheduling.
pub fn render<M: RationalMap + ?Sized>(map: &M, geom: &Geometry, job: &RenderJob) -> Result<Image> {
    job.validate(geom.n)?;
    let w = job.width as usize;
    let mut rgb = vec![0u8; 3 * w * job.height as usize];
    rgb.par_chunks_mut(3 * w).enumerate().for_each(|(j, row)| {
        for i in 0..w {
            let px = pixel_rgb(map, geom, job, job.pixel_center(i as u32, j as u32));
            row[3 * i..3 * i + 3].copy_from_slice(&px);
        }
    });
    Ok(Image { width: job.width, height: job.height, rgb })
}

/// Color changes along a sequence of pixels, skipping Julia pixels.
pub fn basin_transitions(pixels: &[[u8; 3]]) -> usize {
    let seq: Vec<&[u8; 3]> = pixels.iter().filter(|p| **p != JULIA_RGB).collect();
    seq.windows(2).filter(|w| w[0] != w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{Region, Ring};
    use crate::numerics::XComplex;

    struct Square;
    impl RationalMap for Square {
        fn eval_x(&self, z: Complex64) -> Result<XComplex> {
            Ok(XComplex::from_c64(z * z))
        }
    }

    fn geom() -> Geometry {
        Geometry {
            n: 1,
            inner: Region::disk0(0.5f64.ln()),
            outer: Region::exterior0(2.0f64.ln()),
            inner_maps_to: Trap::Inner,
            outer_maps_to: Trap::Outer,
            rings: Vec::<Ring>::new(),
            ring_maps_to: Vec::new(),
            orientation: vec![1],
        }
    }

    fn job(mode: RenderMode) -> RenderJob {
        RenderJob { center: Complex64::new(0.0, 0.0), half_width: 1.5, width: 64, height: 48, mode, max_iter: 200 }
    }

    #[test]
    fn header_layout() {
        let img = render(&Square, &geom(), &job(RenderMode::Basin)).unwrap();
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n64 48\n255\n"));
        assert_eq!(ppm.len(), b"P6\n64 48\n255\n".len() + 64 * 48 * 3);
    }

    #[test]
    fn pixel_centers_are_symmetric() {
        let j = job(RenderMode::Basin);
        let a = j.pixel_center(0, 0);
        let b = j.pixel_center(63, 47);
        assert!((a + b).norm() < 1e-12);
        assert!((a.re + 1.5 - 1.5 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn inside_trap_is_constant() {
        let mut j = job(RenderMode::Basin);
        j.half_width = 0.1;
        let img = render(&Square, &geom(), &j).unwrap();
        assert!(img.rgb.chunks(3).all(|p| p == INNER_RGB));
    }

    #[test]
    fn basin_split_at_unit_circle() {
        let img = render(&Square, &geom(), &job(RenderMode::Basin)).unwrap();
        let row: Vec<[u8; 3]> = (0..64).map(|i| img.pixel(i, 24)).collect();
        assert_eq!(basin_transitions(&row), 2);
        assert_eq!(img.pixel(32, 24), INNER_RGB);
        assert_eq!(img.pixel(0, 24), OUTER_RGB);
    }

    #[test]
    fn deterministic_and_validated() {
        let a = render(&Square, &geom(), &job(RenderMode::Escape)).unwrap();
        let b = render(&Square, &geom(), &job(RenderMode::Escape)).unwrap();
        assert_eq!(a, b);
        assert!(render(&Square, &geom(), &job(RenderMode::Itinerary { depth: 7 })).is_err());
    }

    #[test]
    fn hues_distinct() {
        let h: Vec<[u8; 3]> = (0..16).map(|k| hue(k, 16)).collect();
        for i in 0..16 {
            for j in i + 1..16 {
                assert_ne!(h[i], h[j]);
            }
        }
    }
}

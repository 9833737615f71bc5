//! Numerical certification of the Cantor-circle structure: trap regions,
//! ring images, covering degrees and critical values.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::critical::{predicted, refine, CriticalCluster};
use crate::error::{Error, Result};
use crate::family::{basin_combinatorics, FamilyMap, FamilySpec, Trap};
use crate::maps::RationalMap;
use crate::numerics::circle::{circle_points, linspace, winding_adaptive, DEFAULT_SAMPLES};
use crate::parabolic::{FixedPointCheck, ParabolicCluster};
use crate::params::{fit_budget, ParamBudget};

pub fn spec_hash<T: Serialize>(x: &T) -> String {
    let json = serde_json::to_string(x).expect("serializable");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// An open disk or the open complement of a closed disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Disk { center: Complex64, ln_radius: f64 },
    Exterior { center: Complex64, ln_radius: f64 },
}

impl Region {
    pub fn disk0(ln_radius: f64) -> Region {
        Region::Disk { center: Complex64::new(0.0, 0.0), ln_radius }
    }

    pub fn exterior0(ln_radius: f64) -> Region {
        Region::Exterior { center: Complex64::new(0.0, 0.0), ln_radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Disk { center, ln_radius } => (z - center).norm().ln() < ln_radius,
            Region::Exterior { center, ln_radius } => !z.is_finite() || (z - center).norm().ln() > ln_radius,
        }
    }

    pub fn ln_radius(&self) -> f64 {
        match *self {
            Region::Disk { ln_radius, .. } | Region::Exterior { ln_radius, .. } => ln_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub ln_lo: f64,
    pub ln_hi: f64,
}

impl Ring {
    pub fn ln_mid(&self) -> f64 {
        0.5 * (self.ln_lo + self.ln_hi)
    }
}

/// Everything the symbolic dynamics needs: the two traps, where they map,
/// and the rings separating the `n` bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n: usize,
    pub inner: Region,
    pub outer: Region,
    pub inner_maps_to: Trap,
    pub outer_maps_to: Trap,
    pub rings: Vec<Ring>,
    /// trap that each ring maps into
    pub ring_maps_to: Vec<Trap>,
    /// sign of the covering degree in each band, innermost first
    pub orientation: Vec<i64>,
}

impl Geometry {
    /// Band index `0..n` by comparing `ln|z|` to the ring midlines.
    pub fn band(&self, z: Complex64) -> usize {
        let l = z.norm().ln();
        self.rings.iter().take_while(|r| l > r.ln_mid()).count()
    }

    /// Index (0-based) of the closed ring containing `z`.
    pub fn ring_of(&self, z: Complex64) -> Option<usize> {
        let l = z.norm().ln();
        self.rings.iter().position(|r| l >= r.ln_lo && l <= r.ln_hi)
    }

    pub fn trap_of(&self, z: Complex64) -> Option<Trap> {
        if self.inner.contains(z) {
            Some(Trap::Inner)
        } else if self.outer.contains(z) {
            Some(Trap::Outer)
        } else {
            None
        }
    }

    pub fn maps_to(&self, t: Trap) -> Trap {
        match t {
            Trap::Inner => self.inner_maps_to,
            Trap::Outer => self.outer_maps_to,
        }
    }

    /// `ln` radii of the band boundaries: trap, ring edges, trap.
    pub fn band_bounds(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 { self.inner_ln_edge() } else { self.rings[j - 1].ln_hi };
        let hi = if j + 1 == self.n { self.outer.ln_radius() } else { self.rings[j].ln_lo };
        (lo, hi)
    }

    fn inner_ln_edge(&self) -> f64 {
        match self.inner {
            Region::Disk { center, ln_radius } => (center.norm() + ln_radius.exp()).ln(),
            Region::Exterior { ln_radius, .. } => ln_radius,
        }
    }

    /// One radius per band, geometric middle of the band bounds.
    pub fn band_radii(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let (lo, hi) = self.band_bounds(j);
                (0.5 * (lo + hi)).exp()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub margin_log: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, margin_log: f64) -> Check {
        Check { name: name.into(), margin_log, pass: margin_log > 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RingCheck {
    pub index: usize,
    pub ln_inner: f64,
    pub ln_outer: f64,
    pub target: Trap,
    pub margin_log: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WindingEntry {
    pub radius: f64,
    pub degree: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Hash)]
pub struct Signature {
    pub p: u8,
    pub n: usize,
    pub degrees: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "status", content = "reasons")]
pub enum Verdict {
    Certified,
    Failed(Vec<String>),
    Inconclusive(Vec<String>),
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Certified => 0,
            Verdict::Failed(_) => 2,
            Verdict::Inconclusive(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub spec_hash: String,
    pub family: String,
    pub trap_mode: String,
    pub trap_checks: Vec<Check>,
    pub ring_checks: Vec<RingCheck>,
    pub critical_checks: Vec<Check>,
    pub winding_profile: Vec<WindingEntry>,
    pub signature: Option<Signature>,
    pub geometry: Option<Geometry>,
    pub clusters: Vec<CriticalCluster>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parabolic_clusters: Vec<ParabolicCluster>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointCheck>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl CertificationReport {
    pub fn empty(spec_hash: String, family: &str, trap_mode: &str) -> CertificationReport {
        CertificationReport {
            spec_hash,
            family: family.into(),
            trap_mode: trap_mode.into(),
            trap_checks: Vec::new(),
            ring_checks: Vec::new(),
            critical_checks: Vec::new(),
            winding_profile: Vec::new(),
            signature: None,
            geometry: None,
            clusters: Vec::new(),
            parabolic_clusters: Vec::new(),
            fixed_point: None,
            verdict: Verdict::Inconclusive(vec!["not run".into()]),
            notes: Vec::new(),
        }
    }

    /// Collect failures from the check lists into a verdict, keeping
    /// `extra_fail` and `inconclusive` reasons gathered along the way.
    pub fn settle(&mut self, mut fails: Vec<String>, inconclusive: Vec<String>) {
        for c in self.trap_checks.iter().chain(&self.critical_checks) {
            if !c.pass {
                fails.push(format!("{} (margin {:.3e})", c.name, c.margin_log));
            }
        }
        for r in &self.ring_checks {
            if !r.pass {
                fails.push(format!(
                    "ring {} image not inside {:?} trap (margin {:.3e})",
                    r.index, r.target, r.margin_log
                ));
            }
        }
        self.verdict = if !fails.is_empty() {
            Verdict::Failed(fails)
        } else if !inconclusive.is_empty() {
            Verdict::Inconclusive(inconclusive)
        } else {
            Verdict::Certified
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapMode {
    Budget,
    Empirical,
    Auto,
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub trap_mode: TrapMode,
    /// inner trap radius override (empirical mode)
    pub s: Option<f64>,
    /// outer trap radius override (empirical mode)
    pub outer: Option<f64>,
    pub budget: Option<ParamBudget>,
    pub samples: usize,
    pub ring_circles: usize,
    /// relative half-width of empirical rings around the critical radii
    pub ring_width: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            trap_mode: TrapMode::Auto,
            s: None,
            outer: None,
            budget: None,
            samples: DEFAULT_SAMPLES,
            ring_circles: 16,
            ring_width: 0.01,
        }
    }
}

/// `ln|f|` at a point, with poles at `+inf` and zeros at `-inf`.
pub fn ln_abs_at<M: RationalMap + ?Sized>(map: &M, z: Complex64) -> f64 {
    match map.eval_x(z) {
        Ok(v) => v.ln_abs(),
        Err(Error::Pole(_)) => f64::INFINITY,
        Err(_) => f64::NAN,
    }
}

/// Extremes of `ln|f|` over concentric circles about the origin.
pub fn circles_extrema<M: RationalMap + ?Sized>(map: &M, ln_radii: &[f64], samples: usize) -> Result<(f64, f64)> {
    let pts: Vec<Complex64> =
        ln_radii.iter().flat_map(|&l| circle_points(Complex64::new(0.0, 0.0), l.exp(), samples)).collect();
    let (lo, hi) = pts
        .par_iter()
        .map(|&z| {
            let l = ln_abs_at(map, z);
            (l, l)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::Resolution("NaN while sampling".into()));
    }
    Ok((lo, hi))
}

/// Margin of `f(ring) ⊂ target`: `ln s - max ln|f|` for the inner trap,
/// `min ln|f| - ln R` for the outer one.
#[allow(clippy::too_many_arguments)]
pub fn ring_image_check<M: RationalMap + ?Sized>(
    map: &M,
    index: usize,
    ring: Ring,
    target: Trap,
    ln_s: f64,
    ln_big: f64,
    circles: usize,
    samples: usize,
) -> Result<RingCheck> {
    let radii = linspace(ring.ln_lo, ring.ln_hi, circles.max(2));
    let (lo, hi) = circles_extrema(map, &radii, samples)?;
    let margin = match target {
        Trap::Inner => ln_s - hi,
        Trap::Outer => lo - ln_big,
    };
    Ok(RingCheck { index, ln_inner: ring.ln_lo, ln_outer: ring.ln_hi, target, margin_log: margin, pass: margin > 0.0 })
}

const INNER_OFFSETS: [f64; 5] = [0.0, -0.5, -1.0, -2.0, -4.0];
const OUTER_OFFSETS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

fn trap_margin(ext: (f64, f64), dest: Trap, ln_s: f64, ln_big: f64) -> f64 {
    match dest {
        Trap::Inner => ln_s - ext.1,
        Trap::Outer => ext.0 - ln_big,
    }
}

fn trap_name(t: Trap) -> &'static str {
    match t {
        Trap::Inner => "D_s",
        Trap::Outer => "outer trap",
    }
}

/// Check the trap mapping selected by `(p, n)` by sampling the boundary
/// circles and a few circles inside each trap.
pub fn trap_checks(map: &FamilyMap, ln_s: f64, ln_outer: f64, samples: usize) -> Result<Vec<Check>> {
    let (d0, dinf) = basin_combinatorics(map.p, map.n);
    let inner: Vec<f64> = INNER_OFFSETS.iter().map(|o| ln_s + o).collect();
    let outer: Vec<f64> = OUTER_OFFSETS.iter().map(|o| ln_outer + o).collect();
    let ei = circles_extrema(map, &inner, samples)?;
    let eo = circles_extrema(map, &outer, samples)?;
    Ok(vec![
        Check::new(format!("f(closed D_s) in {}", trap_name(d0)), trap_margin(ei, d0, ln_s, ln_outer)),
        Check::new(format!("f(outer trap) in {}", trap_name(dinf)), trap_margin(eo, dinf, ln_s, ln_outer)),
    ])
}

/// Covering-degree sign in band `j` (0-based): `(-1)^{n-p-j}`.
pub fn expected_orientation(p: u8, n: usize) -> Vec<i64> {
    (0..n).map(|j| if (n as i64 - p as i64 - j as i64).rem_euclid(2) == 0 { 1 } else { -1 }).collect()
}

/// Winding number of `f - about` along `|z| = r` for each radius.
pub fn winding_profile<M: RationalMap + ?Sized>(map: &M, radii: &[f64], about: Complex64) -> Result<Vec<WindingEntry>> {
    let w = crate::numerics::XComplex::from_c64(-about);
    radii
        .iter()
        .map(|&r| {
            let deg = winding_adaptive(|z| Ok(map.eval_x(z)? + w), Complex64::new(0.0, 0.0), r, DEFAULT_SAMPLES)?;
            Ok(WindingEntry { radius: r, degree: deg })
        })
        .collect()
}

/// `p = 1` when the outer trap is invariant, `n` bands, degrees `|winding|`.
pub fn extract_signature(geom: &Geometry, profile: &[WindingEntry]) -> Signature {
    Signature {
        p: if geom.outer_maps_to == Trap::Outer { 1 } else { 0 },
        n: profile.len(),
        degrees: profile.iter().map(|w| w.degree.unsigned_abs() as u32).collect(),
    }
}

/// Compare a measured profile against the expected degrees and signs.
pub fn profile_failures(profile: &[WindingEntry], degrees: &[u32], orientation: &[i64]) -> Vec<String> {
    let mut out = Vec::new();
    if profile.len() != degrees.len() {
        out.push(format!("winding profile has {} entries, expected {}", profile.len(), degrees.len()));
        return out;
    }
    for (j, w) in profile.iter().enumerate() {
        let want = orientation[j] * degrees[j] as i64;
        if w.degree != want {
            out.push(format!("band {j}: winding {} at radius {:e}, expected {want}", w.degree, w.radius));
        }
    }
    out
}

/// `(s, outer)` pair in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapRadii {
    pub ln_s: f64,
    pub ln_outer: f64,
}

fn ring_targets(map: &FamilyMap) -> Vec<Trap> {
    // p=1: n-i odd -> D_s; p=0: n-i even -> D_s
    (1..map.n)
        .map(|i| {
            let odd = (map.n - i) % 2 == 1;
            if odd == (map.p == 1) {
                Trap::Inner
            } else {
                Trap::Outer
            }
        })
        .collect()
}

/// Full set of checks for one choice of traps and rings.
fn run_checks(
    map: &FamilyMap,
    traps: TrapRadii,
    rings: &[Ring],
    clusters: Vec<CriticalCluster>,
    opts: &CertifyOptions,
    mode: &str,
) -> CertificationReport {
    let mut rep = CertificationReport::empty(spec_hash(&map.spec), "hyperbolic", mode);
    let mut fails = Vec::new();
    let mut inconc = Vec::new();
    let (d0, dinf) = basin_combinatorics(map.p, map.n);
    let orientation = expected_orientation(map.p, map.n);
    let geom = Geometry {
        n: map.n,
        inner: Region::disk0(traps.ln_s),
        outer: Region::exterior0(traps.ln_outer),
        inner_maps_to: d0,
        outer_maps_to: dinf,
        rings: rings.to_vec(),
        ring_maps_to: ring_targets(map),
        orientation: orientation.clone(),
    };
    let mut order_ok = traps.ln_s < rings[0].ln_lo && rings.last().unwrap().ln_hi < traps.ln_outer;
    for w in rings.windows(2) {
        order_ok &= w[0].ln_hi < w[1].ln_lo;
    }
    if !order_ok {
        fails.push("traps and rings are not disjoint and radially ordered".into());
    }
    match trap_checks(map, traps.ln_s, traps.ln_outer, opts.samples) {
        Ok(c) => rep.trap_checks = c,
        Err(e) => inconc.push(format!("trap sampling: {e}")),
    }
    let targets = ring_targets(map);
    let checks: Vec<Result<RingCheck>> = rings
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            ring_image_check(map, i + 1, *r, targets[i], traps.ln_s, traps.ln_outer, opts.ring_circles, opts.samples)
        })
        .collect();
    for c in checks {
        match c {
            Ok(c) => rep.ring_checks.push(c),
            Err(e) => inconc.push(format!("ring sampling: {e}")),
        }
    }
    for c in &clusters {
        let r = rings[c.ring_index - 1];
        // budget rings are the clusters' own annuli, whose edges sit closer
        // to the points than double precision resolves; use the offsets there
        let inside = (mode == "budget" && c.in_annulus)
            || c.refined.iter().all(|w| {
                let l = w.norm().ln();
                l > r.ln_lo && l < r.ln_hi
            });
        rep.critical_checks.push(Check {
            name: format!("critical points of cluster {} inside ring", c.ring_index),
            margin_log: if inside { 1.0 } else { -1.0 },
            pass: inside,
        });
        let mut worst = f64::INFINITY;
        for w in &c.refined {
            let l = ln_abs_at(map, *w);
            worst = worst.min((traps.ln_s - l).max(l - traps.ln_outer));
        }
        rep.critical_checks
            .push(Check::new(format!("critical values of cluster {} inside traps", c.ring_index), worst));
    }
    match winding_profile(map, &geom.band_radii(), Complex64::new(0.0, 0.0)) {
        Ok(p) => {
            fails.extend(profile_failures(&p, &map.spec.degrees, &orientation));
            rep.signature = Some(extract_signature(&geom, &p));
            rep.winding_profile = p;
        }
        Err(e) => inconc.push(format!("winding: {e}")),
    }
    rep.geometry = Some(geom);
    rep.clusters = clusters;
    rep.settle(fails, inconc);
    rep
}

fn budget_attempt(map: &FamilyMap, budget: &ParamBudget, opts: &CertifyOptions) -> CertificationReport {
    let traps = TrapRadii { ln_s: budget.ln_s, ln_outer: budget.ln_outer() };
    let clusters = match refine(map, &predicted(map, budget.ln_eps())) {
        Ok(c) => c,
        Err(e) => return inconclusive(map, "budget", format!("critical refinement: {e}")),
    };
    let mut rings = Vec::new();
    for c in &clusters {
        let (lo, hi) = c.annulus();
        if lo <= 0.0 {
            return failed(map, "budget", format!("ring {} has non-positive inner radius", c.ring_index));
        }
        rings.push(Ring { ln_lo: lo.ln(), ln_hi: hi.ln() });
    }
    let mut rep = run_checks(map, traps, &rings, clusters.clone(), opts, "budget");
    for c in &clusters {
        if !c.in_annulus {
            rep.notes.push(format!("cluster {} leaves its annulus", c.ring_index));
        }
    }
    rep
}

fn inconclusive(map: &FamilyMap, mode: &str, why: String) -> CertificationReport {
    let mut r = CertificationReport::empty(spec_hash(&map.spec), "hyperbolic", mode);
    r.verdict = Verdict::Inconclusive(vec![why]);
    r
}

fn failed(map: &FamilyMap, mode: &str, why: String) -> CertificationReport {
    let mut r = CertificationReport::empty(spec_hash(&map.spec), "hyperbolic", mode);
    r.verdict = Verdict::Failed(vec![why]);
    r
}

/// Rings hugging the refined critical radii, `(1 - w, 1 + w)` relative.
pub fn empirical_rings(clusters: &[CriticalCluster], width: f64) -> Vec<Ring> {
    clusters
        .iter()
        .map(|c| {
            let lo = c.refined.iter().map(|w| w.norm()).fold(f64::INFINITY, f64::min);
            let hi = c.refined.iter().map(|w| w.norm()).fold(0.0, f64::max);
            Ring { ln_lo: (lo * (1.0 - width)).ln(), ln_hi: (hi * (1.0 + width)).ln() }
        })
        .collect()
}

const FIT_GRID: usize = 48;
const FIT_SAMPLES: usize = 512;

/// Search a log-spaced grid of `(s, R)` for the pair with the best worst-case
/// margin over trap and ring conditions.
pub fn fit_empirical_traps(map: &FamilyMap, rings: &[Ring], opts: &CertifyOptions) -> Result<(TrapRadii, f64)> {
    let targets = ring_targets(map);
    let mut small_max = f64::NEG_INFINITY;
    let mut large_min = f64::INFINITY;
    for (i, r) in rings.iter().enumerate() {
        let radii = linspace(r.ln_lo, r.ln_hi, opts.ring_circles.max(2));
        let (lo, hi) = circles_extrema(map, &radii, FIT_SAMPLES)?;
        match targets[i] {
            Trap::Inner => small_max = small_max.max(hi),
            Trap::Outer => large_min = large_min.min(lo),
        }
    }
    let s_hi = rings[0].ln_lo;
    let s_lo = if small_max.is_finite() { small_max } else { s_hi - 20.0 };
    let k_lo = rings.last().unwrap().ln_hi;
    let k_hi = if large_min.is_finite() { large_min } else { k_lo + 20.0 };
    if !(s_lo < s_hi) || !(k_lo < k_hi) {
        return Err(Error::Domain(format!(
            "no room for traps: s in ({s_lo:.3}, {s_hi:.3}), outer in ({k_lo:.3}, {k_hi:.3}) (log scale)"
        )));
    }
    let (d0, dinf) = basin_combinatorics(map.p, map.n);
    let interior = |a: f64, b: f64| -> Vec<f64> {
        (1..=FIT_GRID).map(|k| a + (b - a) * k as f64 / (FIT_GRID + 1) as f64).collect()
    };
    let s_c = interior(s_lo, s_hi);
    let k_c = interior(k_lo, k_hi);
    let s_ext: Vec<(f64, f64)> =
        s_c.iter().map(|&l| circles_extrema(map, &INNER_OFFSETS.map(|o| l + o), FIT_SAMPLES)).collect::<Result<_>>()?;
    let k_ext: Vec<(f64, f64)> =
        k_c.iter().map(|&l| circles_extrema(map, &OUTER_OFFSETS.map(|o| l + o), FIT_SAMPLES)).collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, &ls) in s_c.iter().enumerate() {
        for (j, &lk) in k_c.iter().enumerate() {
            let m = [
                trap_margin(s_ext[i], d0, ls, lk),
                trap_margin(k_ext[j], dinf, ls, lk),
                ls - small_max,
                large_min - lk,
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            if m > best.0 {
                best = (m, i, j);
            }
        }
    }
    Ok((TrapRadii { ln_s: s_c[best.1], ln_outer: k_c[best.2] }, best.0))
}

fn empirical_attempt(map: &FamilyMap, budget: &ParamBudget, opts: &CertifyOptions) -> CertificationReport {
    let clusters = match refine(map, &predicted(map, budget.ln_eps())) {
        Ok(c) => c,
        Err(e) => return inconclusive(map, "empirical", format!("critical refinement: {e}")),
    };
    let rings = empirical_rings(&clusters, opts.ring_width);
    let mut notes = Vec::new();
    let traps = match (opts.s, opts.outer) {
        (Some(s), Some(o)) => TrapRadii { ln_s: s.ln(), ln_outer: o.ln() },
        _ => match fit_empirical_traps(map, &rings, opts) {
            Ok((t, m)) => {
                notes.push(format!(
                    "auto-fitted traps s = {:.6e}, outer = {:.6e} (coarse margin {m:.3e})",
                    t.ln_s.exp(),
                    t.ln_outer.exp()
                ));
                let t = TrapRadii {
                    ln_s: opts.s.map_or(t.ln_s, f64::ln),
                    ln_outer: opts.outer.map_or(t.ln_outer, f64::ln),
                };
                t
            }
            Err(e) => return failed(map, "empirical", format!("trap fit: {e}")),
        },
    };
    let mut rep = run_checks(map, traps, &rings, clusters, opts, "empirical");
    rep.notes.extend(notes);
    rep.notes.push("band symbols use ring separators fitted to the critical radii".into());
    rep
}

/// Certify a member of the hyperbolic family.
pub fn certify(spec: &FamilySpec, opts: &CertifyOptions) -> CertificationReport {
    let map = match spec.compile() {
        Ok(m) => m,
        Err(e) => {
            let mut r = CertificationReport::empty(spec_hash(spec), "hyperbolic", "none");
            r.verdict = Verdict::Failed(vec![e.to_string()]);
            return r;
        }
    };
    certify_map(&map, opts)
}

pub fn certify_map(map: &FamilyMap, opts: &CertifyOptions) -> CertificationReport {
    let budget = match opts.budget.clone().map(Ok).unwrap_or_else(|| fit_budget(&map.spec)) {
        Ok(b) => b,
        Err(e) => return failed(map, "none", e.to_string()),
    };
    match opts.trap_mode {
        TrapMode::Budget => budget_attempt(map, &budget, opts),
        TrapMode::Empirical => empirical_attempt(map, &budget, opts),
        TrapMode::Auto => {
            let b = budget_attempt(map, &budget, opts);
            if b.verdict.is_certified() {
                return b;
            }
            let mut e = empirical_attempt(map, &budget, opts);
            let why = match &b.verdict {
                Verdict::Failed(r) | Verdict::Inconclusive(r) => r.join("; "),
                Verdict::Certified => String::new(),
            };
            e.notes.insert(0, format!("budget traps did not certify: {why}"));
            e
        }
    }
}

/// Equality, or agreement after `z -> 1/z`: degrees reversed, `p` kept for
/// odd `n` and flipped for even `n`.
pub fn signatures_conjugate(a: &Signature, b: &Signature) -> bool {
    if a == b {
        return true;
    }
    if a.n != b.n {
        return false;
    }
    let rev: Vec<u32> = b.degrees.iter().rev().copied().collect();
    let p = if b.n % 2 == 1 { b.p } else { 1 - b.p };
    a.degrees == rev && a.p == p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::synth;

    fn sig(p: u8, d: &[u32]) -> Signature {
        Signature { p, n: d.len(), degrees: d.to_vec() }
    }

    #[test]
    fn conjugacy_rule() {
        assert!(!signatures_conjugate(&sig(1, &[5, 5, 5, 5]), &sig(1, &[3, 3])));
        assert!(signatures_conjugate(&sig(0, &[2, 3]), &sig(1, &[3, 2])));
        assert!(signatures_conjugate(&sig(1, &[4, 5, 6]), &sig(1, &[4, 5, 6])));
        assert!(signatures_conjugate(&sig(1, &[4, 5, 6]), &sig(1, &[6, 5, 4])));
        assert!(!signatures_conjugate(&sig(0, &[4, 5, 6]), &sig(1, &[6, 5, 4])));
    }

    #[test]
    fn orientation_signs() {
        assert_eq!(expected_orientation(1, 4), vec![-1, 1, -1, 1]);
        assert_eq!(expected_orientation(0, 2), vec![1, -1]);
    }

    #[test]
    fn synthesized_certifies_with_budget_traps() {
        let (spec, b) = synth(1, &[4, 4, 4], 1.0).unwrap();
        let opts = CertifyOptions { trap_mode: TrapMode::Budget, budget: Some(b), ..Default::default() };
        let r = certify(&spec, &opts);
        assert!(r.verdict.is_certified(), "{:#?}", r.verdict);
        assert_eq!(r.signature.unwrap(), sig(1, &[4, 4, 4]));
        let ring2 = &r.ring_checks[1];
        assert_eq!(ring2.target, Trap::Inner);
        assert!(ring2.margin_log > 0.0);
        assert_eq!(r.ring_checks[0].target, Trap::Outer);
    }

    #[test]
    fn region_membership() {
        let d = Region::Disk { center: Complex64::new(-0.75, 0.0), ln_radius: 0.75f64.ln() };
        assert!(d.contains(Complex64::new(-0.5, 0.1)));
        assert!(!d.contains(Complex64::new(0.0, 0.0)));
        let e = Region::exterior0(0.0);
        assert!(e.contains(Complex64::new(f64::INFINITY, 0.0)));
        assert!(!e.contains(Complex64::new(1.0, 0.0)));
    }
}

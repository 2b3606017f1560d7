//! Magnetic field sampling on a lattice and arrow glyphs.

use serde::{Deserialize, Serialize};

use crate::camera::{clip_segment_to, ViewSpec};
use crate::display::{DisplayList, MarkerShape, Prim, Rgb};
use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

/// Maximum number of lattice points.
pub const MAX_LATTICE_POINTS: usize = 1_000_000;
/// Longest arrow under the default scale, in lattice spacings.
pub const DEFAULT_ARROW_SPACINGS: f64 = 0.8;

pub const ARROW_RGB: Rgb = [0.55, 0.1, 0.7];
pub const ZERO_FIELD_RGB: Rgb = [0.5, 0.5, 0.5];
/// Radius of zero-field markers, film millimeters.
pub const ZERO_MARKER_R: f64 = 0.25;

/// Anything that can evaluate a field (tesla) at a point (mm).
pub trait FieldProvider {
    fn field(&self, p: Point3) -> Result<Vec3>;
}

impl<F: Fn(Point3) -> Result<Vec3>> FieldProvider for F {
    fn field(&self, p: Point3) -> Result<Vec3> {
        self(p)
    }
}

/// Azimuthal toroid field falling as `1/r` inside a cylindrical shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToroidField {
    pub b0: f64,
    pub r0: f64,
    pub r_in: f64,
    pub r_out: f64,
}

impl ToroidField {
    pub fn new(b0: f64, r0: f64, r_in: f64, r_out: f64) -> Result<ToroidField> {
        let ok = [b0, r0, r_in, r_out].iter().all(|v| v.is_finite()) && 0.0 < r_in && r_in < r0 && r0 < r_out;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "toroid needs 0 < R_in < R0 < R_out, got R_in={r_in}, R0={r0}, R_out={r_out}"
            )));
        }
        Ok(ToroidField { b0, r0, r_in, r_out })
    }

    pub fn at(&self, p: Point3) -> Vec3 {
        let r = p.x.hypot(p.y);
        if r < self.r_in || r > self.r_out {
            return Vec3::ZERO;
        }
        // B0·(R0/r)·(−y, x, 0)/r
        let k = self.b0 * self.r0 / (r * r);
        Vec3::new(-p.y * k, p.x * k, 0.0)
    }
}

impl FieldProvider for ToroidField {
    fn field(&self, p: Point3) -> Result<Vec3> {
        Ok(self.at(p))
    }
}

/// `B0·(R0/r)·φ̂` for `R_in ≤ r ≤ R_out`, zero elsewhere.
pub fn toroid_field(p: Point3, b0: f64, r0: f64, r_in: f64, r_out: f64) -> Result<Vec3> {
    Ok(ToroidField::new(b0, r0, r_in, r_out)?.at(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lo: Point3,
    pub hi: Point3,
    pub counts: [usize; 3],
}

impl LatticeSpec {
    pub fn new(lo: Point3, hi: Point3, counts: [usize; 3]) -> Result<LatticeSpec> {
        let l = LatticeSpec { lo, hi, counts };
        l.check()?;
        Ok(l)
    }

    pub fn check(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidArgument("lattice bounds must be finite".into()));
        }
        if (0..3).any(|k| self.lo[k] > self.hi[k]) {
            return Err(Error::InvalidArgument("lattice lo must not exceed hi".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::InvalidArgument("lattice counts must be at least 1".into()));
        }
        let total = self.counts.iter().try_fold(1usize, |a, &c| a.checked_mul(c));
        match total {
            Some(n) if n <= MAX_LATTICE_POINTS => Ok(()),
            _ => Err(Error::InvalidArgument(format!("lattice exceeds {MAX_LATTICE_POINTS} points"))),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate `i` along axis `k`: `lo + i·((hi − lo)/(n − 1))`, or the
    /// midpoint for a single point.
    pub fn coord(&self, k: usize, i: usize) -> f64 {
        let (lo, hi, n) = (self.lo[k], self.hi[k], self.counts[k]);
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + i as f64 * ((hi - lo) / (n - 1) as f64)
        }
    }

    /// Lattice points, x fastest, then y, then z.
    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        let [nx, ny, nz] = self.counts;
        (0..nz).flat_map(move |k| {
            (0..ny).flat_map(move |j| (0..nx).map(move |i| Vec3::new(self.coord(0, i), self.coord(1, j), self.coord(2, k))))
        })
    }

    /// Smallest spacing along the axes with more than one distinct point.
    pub fn spacing(&self) -> Option<f64> {
        (0..3)
            .filter(|&k| self.counts[k] > 1 && self.hi[k] > self.lo[k])
            .map(|k| (self.hi[k] - self.lo[k]) / (self.counts[k] - 1) as f64)
            .min_by(f64::total_cmp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub position: Point3,
    /// Tesla; zero for invalid samples.
    pub b: Vec3,
    pub valid: bool,
}

/// Evaluates the provider at every lattice point. A point where the
/// provider fails or returns a non-finite value is flagged invalid.
pub fn sample_field(provider: &dyn FieldProvider, lattice: &LatticeSpec) -> Result<Vec<FieldSample>> {
    lattice.check()?;
    Ok(lattice
        .points()
        .map(|p| match provider.field(p) {
            Ok(b) if b.is_finite() => FieldSample { position: p, b, valid: true },
            _ => FieldSample { position: p, b: Vec3::ZERO, valid: false },
        })
        .collect())
}

/// Scale (mm per tesla) making the longest arrow
/// [`DEFAULT_ARROW_SPACINGS`] lattice spacings long. A lattice without
/// spacing counts as 1 mm; a field-free sample set gives 1.
pub fn default_scale(samples: &[FieldSample], lattice: &LatticeSpec) -> f64 {
    let bmax = samples.iter().filter(|s| s.valid).map(|s| s.b.norm()).fold(0.0, f64::max);
    if bmax == 0.0 {
        return 1.0;
    }
    DEFAULT_ARROW_SPACINGS * lattice.spacing().unwrap_or(1.0) / bmax
}

/// One arrow per valid non-zero sample from its position to
/// `position + scale·B`; a marker for each zero-field sample. Samples in
/// front of the near plane are skipped and arrow heads are cut at it.
pub fn field_overlay(samples: &[FieldSample], view: &ViewSpec, scale: f64) -> Result<DisplayList> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("arrow scale must be positive, got {scale}")));
    }
    let cam = view.camera()?;
    let near = [cam.clip_planes()[0]];
    let mut list = DisplayList::new(0);
    for s in samples.iter().filter(|s| s.valid) {
        if cam.depth(s.position) <= cam.near_depth() {
            continue;
        }
        let tail = cam.project_unchecked(s.position);
        if s.b == Vec3::ZERO {
            list.prims.push(Prim::Marker {
                at: [tail.u, tail.v],
                shape: MarkerShape::Dot,
                r: ZERO_MARKER_R,
                rgb: ZERO_FIELD_RGB,
            });
            continue;
        }
        let Some((_, head)) = clip_segment_to(&near, s.position, s.position + s.b * scale) else { continue };
        let head = cam.project_unchecked(head);
        list.prims.push(Prim::Arrow { tail: [tail.u, tail.v], head: [head.u, head.v], rgb: ARROW_RGB });
    }
    Ok(list)
}

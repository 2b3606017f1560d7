//! Boolean addition, subtraction and intersection of supervolumes.
//!
//! Each operand is turned into a BSP tree of convex polygons; each solid's
//! polygons are clipped against the other, and the surviving pieces are
//! reassembled per the usual facet tables (union keeps A-outside-B and
//! B-outside-A, intersection keeps the insides, subtraction keeps A outside B
//! plus B inside A flipped). Coplanar overlaps resolve through the plane
//! orientation rule of the tree: same-facing pieces survive once for union and
//! intersection; opposite-facing pieces cancel for subtraction.

mod bsp;
mod repair;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Tolerances, Vec3};
use crate::mesh::{is_convex, triangulate};
use crate::validate::validate;
use crate::volume::{SuperVolume, Volume};

use bsp::{Bsp, Poly};
use repair::{rebuild_volumes, RepairTolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BooleanOpKind {
    Addition,
    Subtraction,
    Intersection,
}

impl fmt::Display for BooleanOpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BooleanOpKind::Addition => "addition",
            BooleanOpKind::Subtraction => "subtraction",
            BooleanOpKind::Intersection => "intersection",
        })
    }
}

impl FromStr for BooleanOpKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "addition" | "union" | "add" => Ok(BooleanOpKind::Addition),
            "subtraction" | "subtract" | "difference" => Ok(BooleanOpKind::Subtraction),
            "intersection" | "intersect" => Ok(BooleanOpKind::Intersection),
            other => Err(Error::InvalidArgument(format!("unknown boolean kind `{other}`"))),
        }
    }
}

/// Combines two supervolumes into a new one named `name`.
///
/// The result has an identity transform and contains one volume per disjoint
/// solid piece; an empty point set gives [`SuperVolume::empty`].
pub fn boolean(a: &SuperVolume, b: &SuperVolume, kind: BooleanOpKind) -> Result<SuperVolume> {
    let name = format!("{}_{}_{}", a.name, kind, b.name);
    boolean_named(a, b, kind, &name)
}

pub fn boolean_named(a: &SuperVolume, b: &SuperVolume, kind: BooleanOpKind, name: &str) -> Result<SuperVolume> {
    let wa = checked_world_volumes(a)?;
    let wb = checked_world_volumes(b)?;
    let bounds = bounds_of(&wa).union(&bounds_of(&wb));
    let ctx = Context::new(&bounds);
    let pa = ctx.operand(&wa);
    let pb = ctx.operand(&wb);

    let polys = match kind {
        BooleanOpKind::Addition => ctx.union(pa, pb),
        BooleanOpKind::Subtraction => ctx.subtract(pa, pb),
        BooleanOpKind::Intersection => ctx.intersect(pa, pb),
    };
    let volumes = ctx.finish(&polys, name);
    let mut out = SuperVolume::empty(name);
    out.volumes = volumes;
    out.style = a.style;
    Ok(out)
}

/// Sum of divergence-theorem volumes of all member volumes, in mm³.
pub fn enclosed_volume(sv: &SuperVolume) -> Result<f64> {
    let mut total = 0.0;
    for v in &sv.volumes {
        let r = validate(v);
        if !r.closed {
            return Err(Error::InvalidGeometry(format!("volume `{}` is not closed", v.name)));
        }
        total += r.signed_volume;
    }
    Ok(total)
}

/// Volume of `a ∩ b` for two world-frame volumes already known to be valid.
pub(crate) fn intersection_volume(a: &Volume, b: &Volume) -> f64 {
    let bounds = a.bounds().union(&b.bounds());
    let ctx = Context::new(&bounds);
    let pa = ctx.operand(std::slice::from_ref(a));
    let pb = ctx.operand(std::slice::from_ref(b));
    let polys = ctx.intersect(pa, pb);
    ctx.finish(&polys, "clash").iter().map(|v| v.signed_volume()).sum()
}

fn checked_world_volumes(sv: &SuperVolume) -> Result<Vec<Volume>> {
    for v in &sv.volumes {
        let r = validate(v);
        if !r.passed() {
            let why: Vec<String> = r.issues.iter().map(|i| i.to_string()).collect();
            return Err(Error::InvalidGeometry(format!(
                "`{}/{}`: {}",
                sv.name,
                v.name,
                why.join("; ")
            )));
        }
    }
    Ok(sv.world_volumes())
}

fn bounds_of(vols: &[Volume]) -> Aabb {
    vols.iter().fold(Aabb::EMPTY, |b, v| b.union(&v.bounds()))
}

struct Context {
    classify_eps: f64,
    repair: RepairTolerances,
}

/// Operand polygons with the bounds of each member solid.
struct Operand {
    polys: Vec<Poly>,
    bounds: Aabb,
}

impl Context {
    fn new(bounds: &Aabb) -> Context {
        let diag = bounds.diagonal().max(f64::MIN_POSITIVE);
        let tol = Tolerances::for_diagonal(diag);
        Context {
            classify_eps: 10.0 * tol.geom,
            repair: RepairTolerances { weld: tol.geom, plane: tol.plane, volume: 1e-12 * diag * diag * diag },
        }
    }

    fn polys_of(&self, v: &Volume) -> Vec<Poly> {
        let mut out = Vec::with_capacity(v.facets.len());
        for f in &v.facets {
            if is_convex(&f.vertices) {
                out.extend(Poly::new(f.vertices.clone(), f.rgb));
            } else {
                for t in triangulate(&f.vertices) {
                    out.extend(Poly::new(t.to_vec(), f.rgb));
                }
            }
        }
        out
    }

    /// The member volumes of one supervolume as a single point set.
    fn operand(&self, vols: &[Volume]) -> Operand {
        let mut acc = Operand { polys: Vec::new(), bounds: Aabb::EMPTY };
        for v in vols {
            let next = Operand { polys: self.polys_of(v), bounds: v.bounds() };
            acc = if acc.polys.is_empty() {
                next
            } else if !acc.bounds.overlaps_strictly(&next.bounds, -self.classify_eps) {
                let mut polys = acc.polys;
                polys.extend(next.polys);
                Operand { polys, bounds: acc.bounds.union(&next.bounds) }
            } else {
                let b = acc.bounds.union(&next.bounds);
                Operand { polys: self.union(acc, next), bounds: b }
            };
        }
        acc
    }

    fn union(&self, a: Operand, b: Operand) -> Vec<Poly> {
        if a.polys.is_empty() {
            return b.polys;
        }
        // Touching solids still need clipping so the shared patch disappears.
        if b.polys.is_empty() || !a.bounds.overlaps_strictly(&b.bounds, -self.classify_eps) {
            let mut p = a.polys;
            p.extend(b.polys);
            return p;
        }
        let mut ta = Bsp::new(a.polys, self.classify_eps);
        let mut tb = Bsp::new(b.polys, self.classify_eps);
        ta.clip_to(&tb);
        tb.clip_to(&ta);
        tb.invert();
        tb.clip_to(&ta);
        tb.invert();
        let mut out = ta.all_polygons();
        out.extend(tb.all_polygons());
        out
    }

    fn subtract(&self, a: Operand, b: Operand) -> Vec<Poly> {
        if a.polys.is_empty() || b.polys.is_empty() || !a.bounds.overlaps_strictly(&b.bounds, 0.0) {
            return a.polys;
        }
        let mut ta = Bsp::new(a.polys, self.classify_eps);
        let mut tb = Bsp::new(b.polys, self.classify_eps);
        ta.invert();
        ta.clip_to(&tb);
        tb.clip_to(&ta);
        tb.invert();
        tb.clip_to(&ta);
        tb.invert();
        let mut out = ta.all_polygons();
        out.extend(tb.all_polygons());
        for p in &mut out {
            p.flip();
        }
        out
    }

    fn intersect(&self, a: Operand, b: Operand) -> Vec<Poly> {
        if a.polys.is_empty() || b.polys.is_empty() || !a.bounds.overlaps_strictly(&b.bounds, 0.0) {
            return Vec::new();
        }
        let mut ta = Bsp::new(a.polys, self.classify_eps);
        let mut tb = Bsp::new(b.polys, self.classify_eps);
        ta.invert();
        tb.clip_to(&ta);
        tb.invert();
        ta.clip_to(&tb);
        tb.clip_to(&ta);
        let mut out = ta.all_polygons();
        out.extend(tb.all_polygons());
        for p in &mut out {
            p.flip();
        }
        out
    }

    fn finish(&self, polys: &[Poly], name: &str) -> Vec<Volume> {
        if polys.is_empty() {
            return Vec::new();
        }
        let soup: Vec<(Vec<Vec3>, [f64; 3])> = polys.iter().map(|p| (p.verts.clone(), p.rgb)).collect();
        rebuild_volumes(&soup, &self.repair, name)
    }
}

//! Facets, volumes, supervolumes and the primitive solid generators.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{newell_normal, Aabb, Plane, Point3, RigidTransform, Vec3};
use crate::mesh::{dedup_cyclic, polygon_signed_volume};

/// Facet color used by the generators.
pub const DEFAULT_RGB: [f64; 3] = [0.72, 0.74, 0.78];

/// Polygon count used for curved primitives when the caller has no preference.
pub const DEFAULT_SIDES: usize = 32;

/// Planar polygonal face, counter-clockwise when seen from outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub vertices: Vec<Point3>,
    pub rgb: [f64; 3],
}

impl Facet {
    pub fn new(vertices: Vec<Point3>, rgb: [f64; 3]) -> Facet {
        Facet { vertices, rgb }
    }

    /// Unit outward normal, `None` for a zero-area facet.
    pub fn normal(&self) -> Option<Vec3> {
        newell_normal(&self.vertices).normalized()
    }

    pub fn plane(&self) -> Option<Plane> {
        Plane::from_polygon(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        newell_normal(&self.vertices).norm() * 0.5
    }

    pub fn transformed(&self, t: &RigidTransform) -> Facet {
        Facet { vertices: self.vertices.iter().map(|p| t.apply(*p)).collect(), rgb: self.rgb }
    }

    pub fn reversed(&self) -> Facet {
        let mut v = self.vertices.clone();
        v.reverse();
        Facet { vertices: v, rgb: self.rgb }
    }
}

/// Closed polyhedral solid bounded by facets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    pub name: String,
    pub facets: Vec<Facet>,
}

impl Volume {
    pub fn new(name: impl Into<String>, facets: Vec<Facet>) -> Volume {
        Volume { name: name.into(), facets }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.facets.iter().flat_map(|f| f.vertices.iter()))
    }

    /// Divergence-theorem volume; positive for outward-oriented closed meshes.
    pub fn signed_volume(&self) -> f64 {
        self.facets.iter().map(|f| polygon_signed_volume(&f.vertices)).sum()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Volume {
        Volume { name: self.name.clone(), facets: self.facets.iter().map(|f| f.transformed(t)).collect() }
    }

    pub fn with_rgb(mut self, rgb: [f64; 3]) -> Volume {
        for f in &mut self.facets {
            f.rgb = rgb;
        }
        self
    }

    /// Builds facets from a vertex table and index loops, dropping repeated
    /// consecutive vertices and faces that collapse below three corners.
    fn from_indexed(name: &str, verts: &[Vec3], faces: &[Vec<usize>]) -> Volume {
        let facets = faces
            .iter()
            .filter_map(|f| {
                let pts = dedup_cyclic(f.iter().map(|&i| verts[i]).collect::<Vec<_>>());
                (pts.len() >= 3).then(|| Facet::new(pts, DEFAULT_RGB))
            })
            .collect();
        Volume::new(name, facets)
    }
}

/// Display attributes of a supervolume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Style {
    /// Draw filled facets; when off the supervolume is drawn as wires only.
    pub fill: bool,
    pub edge_rgb: [f64; 3],
    /// Overrides the facet colors when set.
    pub base_rgb: Option<[f64; 3]>,
}

impl Default for Style {
    fn default() -> Self {
        Style { fill: true, edge_rgb: [0.0, 0.0, 0.0], base_rgb: None }
    }
}

/// Named ensemble of volumes sharing a transform and a style.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperVolume {
    pub name: String,
    pub volumes: Vec<Volume>,
    pub transform: RigidTransform,
    pub style: Style,
}

impl SuperVolume {
    /// Fails when two member volumes share a name.
    pub fn new(name: impl Into<String>, volumes: Vec<Volume>) -> Result<SuperVolume> {
        let mut seen = BTreeSet::new();
        for v in &volumes {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate volume name `{}`", v.name)));
            }
        }
        Ok(SuperVolume {
            name: name.into(),
            volumes,
            transform: RigidTransform::IDENTITY,
            style: Style::default(),
        })
    }

    /// Wraps a single volume under its own name.
    pub fn single(volume: Volume) -> SuperVolume {
        SuperVolume {
            name: volume.name.clone(),
            volumes: vec![volume],
            transform: RigidTransform::IDENTITY,
            style: Style::default(),
        }
    }

    /// The canonical empty result of a boolean operation.
    pub fn empty(name: impl Into<String>) -> SuperVolume {
        SuperVolume {
            name: name.into(),
            volumes: Vec::new(),
            transform: RigidTransform::IDENTITY,
            style: Style::default(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn with_transform(mut self, t: RigidTransform) -> SuperVolume {
        self.transform = t;
        self
    }

    pub fn with_style(mut self, s: Style) -> SuperVolume {
        self.style = s;
        self
    }

    /// Member volumes expressed in the world frame.
    pub fn world_volumes(&self) -> Vec<Volume> {
        if self.transform.is_identity() {
            return self.volumes.clone();
        }
        self.volumes.iter().map(|v| v.transformed(&self.transform)).collect()
    }

    pub fn world_bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        for v in &self.volumes {
            for f in &v.facets {
                for p in &f.vertices {
                    b.include(self.transform.apply(*p));
                }
            }
        }
        b
    }

    pub fn facet_count(&self) -> usize {
        self.volumes.iter().map(|v| v.facets.len()).sum()
    }
}

/// Pre-composes `t` onto the supervolume's placement.
pub fn apply_transform(sv: &SuperVolume, t: &RigidTransform) -> SuperVolume {
    SuperVolume { transform: t.compose(&sv.transform), ..sv.clone() }
}

fn check_len(what: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidDimension(format!("{what} is not finite")));
    }
    Ok(())
}

/// Axis-aligned box centered at the origin.
pub fn make_box(name: &str, half_extents: [f64; 3]) -> Result<Volume> {
    for (axis, h) in ["x", "y", "z"].iter().zip(half_extents) {
        check_len(axis, h)?;
        if h <= 0.0 {
            return Err(Error::InvalidDimension(format!(
                "box half extent along {axis} must be positive, got {h}"
            )));
        }
    }
    let [hx, hy, hz] = half_extents;
    Ok(prism(name, &rect(hx, hy, -hz), &rect(hx, hy, hz)))
}

/// Trapezoidal prism: half widths `x1`,`y1` at `z = -dz`, `x2`,`y2` at `z = +dz`.
///
/// A zero half width at one end collapses that end to an edge or a point
/// (wedge or pyramid).
pub fn make_trd(name: &str, x1: f64, x2: f64, y1: f64, y2: f64, dz: f64) -> Result<Volume> {
    for (what, v) in [("x1", x1), ("x2", x2), ("y1", y1), ("y2", y2), ("dz", dz)] {
        check_len(what, v)?;
        if v < 0.0 {
            return Err(Error::InvalidDimension(format!("trd {what} must be >= 0, got {v}")));
        }
    }
    if dz <= 0.0 {
        return Err(Error::InvalidDimension("trd dz must be positive".into()));
    }
    if x1 == 0.0 && x2 == 0.0 {
        return Err(Error::InvalidDimension("trd x1 and x2 are both zero".into()));
    }
    if y1 == 0.0 && y2 == 0.0 {
        return Err(Error::InvalidDimension("trd y1 and y2 are both zero".into()));
    }
    if (x1 == 0.0 || y1 == 0.0) && (x2 == 0.0 || y2 == 0.0) {
        return Err(Error::InvalidDimension("trd collapses at both ends".into()));
    }
    Ok(prism(name, &rect(x1, y1, -dz), &rect(x2, y2, dz)))
}

/// Polygonal tube along z: solid prism for `r_in = 0`, annular prism otherwise.
/// Vertices lie on the circles of radius `r_in` and `r_out`.
pub fn make_tube(name: &str, r_in: f64, r_out: f64, dz: f64, n_sides: usize) -> Result<Volume> {
    for (what, v) in [("r_in", r_in), ("r_out", r_out), ("dz", dz)] {
        check_len(what, v)?;
    }
    if r_in < 0.0 || r_in >= r_out {
        return Err(Error::InvalidDimension(format!(
            "tube requires 0 <= r_in < r_out, got r_in={r_in}, r_out={r_out}"
        )));
    }
    if dz <= 0.0 {
        return Err(Error::InvalidDimension("tube dz must be positive".into()));
    }
    if n_sides < 3 {
        return Err(Error::InvalidDimension(format!("tube needs at least 3 sides, got {n_sides}")));
    }
    let ring = |r: f64, z: f64| -> Vec<Vec3> {
        (0..n_sides)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n_sides as f64;
                Vec3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    };
    if r_in == 0.0 {
        return Ok(prism(name, &ring(r_out, -dz), &ring(r_out, dz)));
    }
    let n = n_sides;
    let mut verts = ring(r_out, -dz);
    verts.extend(ring(r_out, dz));
    verts.extend(ring(r_in, -dz));
    verts.extend(ring(r_in, dz));
    let (ob, ot, ib, it) = (0, n, 2 * n, 3 * n);
    let mut faces = Vec::with_capacity(4 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push(vec![ot + i, ot + j, it + j, it + i]);
        faces.push(vec![ob + j, ob + i, ib + i, ib + j]);
        faces.push(vec![ob + i, ob + j, ot + j, ot + i]);
        faces.push(vec![ib + j, ib + i, it + i, it + j]);
    }
    Ok(Volume::from_indexed(name, &verts, &faces))
}

/// Enclosed volume of the regular-polygon tube produced by [`make_tube`].
pub fn tube_volume(r_in: f64, r_out: f64, dz: f64, n_sides: usize) -> f64 {
    let n = n_sides as f64;
    let k = n * (2.0 * PI / n).sin() / 2.0;
    k * (r_out * r_out - r_in * r_in) * 2.0 * dz
}

fn rect(hx: f64, hy: f64, z: f64) -> Vec<Vec3> {
    vec![
        Vec3::new(-hx, -hy, z),
        Vec3::new(hx, -hy, z),
        Vec3::new(hx, hy, z),
        Vec3::new(-hx, hy, z),
    ]
}

/// Joins two rings (counter-clockwise seen from +z) into a closed prism.
fn prism(name: &str, bottom: &[Vec3], top: &[Vec3]) -> Volume {
    let n = bottom.len();
    let mut verts = bottom.to_vec();
    verts.extend_from_slice(top);
    let mut faces = Vec::with_capacity(n + 2);
    faces.push((n..2 * n).collect::<Vec<_>>());
    faces.push((0..n).rev().collect::<Vec<_>>());
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push(vec![i, j, n + j, n + i]);
    }
    Volume::from_indexed(name, &verts, &faces)
}

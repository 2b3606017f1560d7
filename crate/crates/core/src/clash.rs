//! Interior-overlap detection between volumes and the surface intersection
//! curves used to highlight clashes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::csg::intersection_volume;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Plane, Tolerances, Vec3};
use crate::mesh::{is_convex, triangulate, Welder};
use crate::validate::validate;
use crate::volume::{SuperVolume, Volume};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClashPair {
    /// `supervolume/volume` paths, `a < b`.
    pub a: String,
    pub b: String,
    /// Closed polylines, first point repeated at the end.
    pub loops: Vec<Vec<Vec3>>,
    /// One volume lies inside the other without the surfaces crossing.
    pub contained: bool,
    pub overlap_volume: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClashReport {
    pub pairs: Vec<ClashPair>,
}

impl ClashReport {
    pub fn pair_names(&self) -> Vec<(String, String)> {
        self.pairs.iter().map(|p| (p.a.clone(), p.b.clone())).collect()
    }
}

struct Item {
    path: String,
    vol: Volume,
    bounds: Aabb,
    /// Convex pieces of every facet, with their planes.
    pieces: Vec<(Vec<Vec3>, Plane)>,
}

/// Reports every pair of volumes, within or across supervolumes, whose
/// interiors overlap. Touching along faces, edges or points is not a clash.
pub fn detect_clashes(scene: &[SuperVolume]) -> Result<ClashReport> {
    let mut items = Vec::new();
    for sv in scene {
        for v in &sv.volumes {
            let r = validate(v);
            if !r.passed() {
                return Err(Error::InvalidGeometry(format!("`{}/{}` fails validation", sv.name, v.name)));
            }
        }
        for v in sv.world_volumes() {
            let bounds = v.bounds();
            let pieces = convex_pieces(&v);
            items.push(Item { path: format!("{}/{}", sv.name, v.name), vol: v, bounds, pieces });
        }
    }
    items.sort_by(|a, b| a.path.cmp(&b.path));
    let scene_bounds = items.iter().fold(Aabb::EMPTY, |b, it| b.union(&it.bounds));
    let tol = Tolerances::for_bounds(&scene_bounds);
    // Anything below this is treated as touching.
    let min_overlap = tol.geom * tol.geom * tol.geom;

    // Broad phase: sweep along x.
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| items[i].bounds.min.x.total_cmp(&items[j].bounds.min.x).then(i.cmp(&j)));
    let mut candidates = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if items[j].bounds.min.x >= items[i].bounds.max.x - tol.geom {
                break;
            }
            if items[i].bounds.overlaps_strictly(&items[j].bounds, tol.geom) {
                candidates.push((i.min(j), i.max(j)));
            }
        }
    }
    candidates.sort_unstable();

    let mut pairs = Vec::new();
    for (i, j) in candidates {
        let (a, b) = (&items[i], &items[j]);
        let overlap = intersection_volume(&a.vol, &b.vol);
        if overlap <= min_overlap {
            continue;
        }
        let loops = intersection_loops(a, b, tol.geom);
        pairs.push(ClashPair {
            a: a.path.clone(),
            b: b.path.clone(),
            contained: loops.is_empty(),
            loops,
            overlap_volume: overlap,
        });
    }
    Ok(ClashReport { pairs })
}

fn convex_pieces(v: &Volume) -> Vec<(Vec<Vec3>, Plane)> {
    let mut out = Vec::new();
    for f in &v.facets {
        let Some(plane) = f.plane() else { continue };
        if is_convex(&f.vertices) {
            out.push((f.vertices.clone(), plane));
        } else {
            out.extend(triangulate(&f.vertices).into_iter().map(|t| (t.to_vec(), plane)));
        }
    }
    out
}

/// Parameter interval of the line `p + t·d` inside a convex planar polygon.
fn line_in_convex(p: Vec3, d: Vec3, poly: &[Vec3], n: Vec3) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let m = n.cross(b - a); // points inward for a counter-clockwise polygon
        let num = m.dot(p - a);
        let den = m.dot(d);
        if den.abs() < 1e-300 {
            if num < 0.0 {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Surface intersection curves of two volumes, chained from facet–facet
/// segments.
fn intersection_loops(a: &Item, b: &Item, eps: f64) -> Vec<Vec<Vec3>> {
    let region = a.bounds.intersection(&b.bounds);
    let near = |pts: &[Vec3]| {
        let bb = Aabb::from_points(pts.iter());
        bb.overlaps_strictly(&region, -eps)
    };
    let pa: Vec<&(Vec<Vec3>, Plane)> = a.pieces.iter().filter(|(p, _)| near(p)).collect();
    let pb: Vec<&(Vec<Vec3>, Plane)> = b.pieces.iter().filter(|(p, _)| near(p)).collect();
    let mut segs: Vec<(Vec3, Vec3)> = Vec::new();
    for (fa, pla) in &pa {
        let ba = Aabb::from_points(fa.iter());
        for (fb, plb) in &pb {
            if !ba.overlaps_strictly(&Aabb::from_points(fb.iter()), -eps) {
                continue;
            }
            let d = pla.normal.cross(plb.normal);
            let dn = d.norm_sq();
            if dn < 1e-18 {
                continue;
            }
            let p = (plb.normal.cross(d) * pla.w + d.cross(pla.normal) * plb.w) / dn;
            let Some((a0, a1)) = line_in_convex(p, d, fa, pla.normal) else { continue };
            let Some((b0, b1)) = line_in_convex(p, d, fb, plb.normal) else { continue };
            let (t0, t1) = (a0.max(b0), a1.min(b1));
            if (t1 - t0) * dn.sqrt() > eps {
                segs.push((p + d * t0, p + d * t1));
            }
        }
    }
    chain(&segs, eps * 10.0)
}

/// Chains segments into loops by endpoint coincidence. Open chains are closed
/// back to their start so every reported loop is closed.
fn chain(segs: &[(Vec3, Vec3)], tol: f64) -> Vec<Vec<Vec3>> {
    let mut w = Welder::new(tol);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for (a, b) in segs {
        let (i, j) = (w.insert(*a), w.insert(*b));
        if i != j {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut adj: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (k, &(i, j)) in edges.iter().enumerate() {
        adj.entry(i).or_default().push(k);
        adj.entry(j).or_default().push(k);
    }
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (s, mut cur) = edges[start];
        let mut path = vec![s, cur];
        while cur != s {
            let next = adj[&cur].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (i, j) = edges[k];
            cur = if i == cur { j } else { i };
            path.push(cur);
        }
        if *path.last().unwrap() != s {
            path.push(s);
        }
        if path.len() >= 4 {
            loops.push(path.iter().map(|&i| w.verts[i as usize]).collect());
        }
    }
    loops
}

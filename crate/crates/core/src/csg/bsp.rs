//! Solid BSP trees over convex polygons.
//!
//! Trees live in an arena and every traversal is iterative, so deep trees from
//! large inputs cannot exhaust the stack.

use crate::geom::{Plane, Vec3};

#[derive(Clone, Debug)]
pub(crate) struct Poly {
    pub verts: Vec<Vec3>,
    pub plane: Plane,
    pub rgb: [f64; 3],
}

impl Poly {
    pub fn new(verts: Vec<Vec3>, rgb: [f64; 3]) -> Option<Poly> {
        let plane = Plane::from_polygon(&verts)?;
        Some(Poly { verts, plane, rgb })
    }

    pub fn flip(&mut self) {
        self.verts.reverse();
        self.plane = self.plane.flipped();
    }
}

const COPLANAR: u8 = 0;
const FRONT: u8 = 1;
const BACK: u8 = 2;
const SPANNING: u8 = 3;

/// Interpolates on an edge in a direction-independent way so that both
/// polygons sharing the edge produce bit-identical split points.
fn split_point(a: Vec3, b: Vec3, plane: &Plane) -> Vec3 {
    let (p, q) = if (a.x, a.y, a.z) <= (b.x, b.y, b.z) { (a, b) } else { (b, a) };
    let denom = plane.normal.dot(q - p);
    let t = (plane.w - plane.normal.dot(p)) / denom;
    p.lerp(q, t.clamp(0.0, 1.0))
}

/// Where a classified polygon goes.
pub(crate) enum Side {
    CoplanarFront,
    CoplanarBack,
    Front,
    Back,
}

/// Splits `poly` by `plane`, reporting each resulting piece with its side.
pub(crate) fn split_polygon(plane: &Plane, poly: Poly, eps: f64, mut out: impl FnMut(Side, Poly)) {
    let mut kind = 0u8;
    let types: Vec<u8> = poly
        .verts
        .iter()
        .map(|v| {
            let t = plane.signed_distance(*v);
            let ty = if t < -eps {
                BACK
            } else if t > eps {
                FRONT
            } else {
                COPLANAR
            };
            kind |= ty;
            ty
        })
        .collect();
    match kind {
        COPLANAR => {
            if plane.normal.dot(poly.plane.normal) > 0.0 {
                out(Side::CoplanarFront, poly)
            } else {
                out(Side::CoplanarBack, poly)
            }
        }
        FRONT => out(Side::Front, poly),
        BACK => out(Side::Back, poly),
        _ => {
            let n = poly.verts.len();
            let mut f = Vec::with_capacity(n + 1);
            let mut b = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (ti, tj) = (types[i], types[j]);
                let (vi, vj) = (poly.verts[i], poly.verts[j]);
                if ti != BACK {
                    f.push(vi);
                }
                if ti != FRONT {
                    b.push(vi);
                }
                if (ti | tj) == SPANNING {
                    let v = split_point(vi, vj, plane);
                    f.push(v);
                    b.push(v);
                }
            }
            if f.len() >= 3 {
                out(Side::Front, Poly { verts: f, plane: poly.plane, rgb: poly.rgb });
            }
            if b.len() >= 3 {
                out(Side::Back, Poly { verts: b, plane: poly.plane, rgb: poly.rgb });
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Node {
    plane: Option<Plane>,
    front: Option<usize>,
    back: Option<usize>,
    polys: Vec<Poly>,
}

#[derive(Clone, Debug)]
pub(crate) struct Bsp {
    nodes: Vec<Node>,
    eps: f64,
}

impl Bsp {
    pub fn new(polys: Vec<Poly>, eps: f64) -> Bsp {
        let mut t = Bsp { nodes: vec![Node::default()], eps };
        t.build(polys);
        t
    }

    /// Inserts polygons, growing the tree where needed.
    pub fn build(&mut self, polys: Vec<Poly>) {
        let mut stack = vec![(0usize, polys)];
        while let Some((ni, polys)) = stack.pop() {
            if polys.is_empty() {
                continue;
            }
            let plane = *self.nodes[ni].plane.get_or_insert(polys[0].plane);
            let mut front = Vec::new();
            let mut back = Vec::new();
            let mut coplanar = Vec::new();
            for p in polys {
                split_polygon(&plane, p, self.eps, |side, piece| match side {
                    Side::CoplanarFront | Side::CoplanarBack => coplanar.push(piece),
                    Side::Front => front.push(piece),
                    Side::Back => back.push(piece),
                });
            }
            self.nodes[ni].polys.extend(coplanar);
            if !front.is_empty() {
                let child = self.child(ni, true);
                stack.push((child, front));
            }
            if !back.is_empty() {
                let child = self.child(ni, false);
                stack.push((child, back));
            }
        }
    }

    fn child(&mut self, ni: usize, front: bool) -> usize {
        let existing = if front { self.nodes[ni].front } else { self.nodes[ni].back };
        if let Some(c) = existing {
            return c;
        }
        let c = self.nodes.len();
        self.nodes.push(Node::default());
        if front {
            self.nodes[ni].front = Some(c);
        } else {
            self.nodes[ni].back = Some(c);
        }
        c
    }

    /// Converts solid space to empty space and back.
    pub fn invert(&mut self) {
        for n in &mut self.nodes {
            for p in &mut n.polys {
                p.flip();
            }
            if let Some(pl) = n.plane.as_mut() {
                *pl = pl.flipped();
            }
            std::mem::swap(&mut n.front, &mut n.back);
        }
    }

    /// Removes the parts of `polys` that lie inside this solid.
    pub fn clip_polygons(&self, polys: Vec<Poly>) -> Vec<Poly> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, polys)];
        while let Some((ni, polys)) = stack.pop() {
            let node = &self.nodes[ni];
            let Some(plane) = node.plane else {
                out.extend(polys);
                continue;
            };
            let mut front = Vec::new();
            let mut back = Vec::new();
            for p in polys {
                split_polygon(&plane, p, self.eps, |side, piece| match side {
                    Side::CoplanarFront | Side::Front => front.push(piece),
                    Side::CoplanarBack | Side::Back => back.push(piece),
                });
            }
            // With no back subtree the back pieces are inside and dropped.
            if let Some(b) = node.back {
                stack.push((b, back));
            }
            match node.front {
                Some(f) => stack.push((f, front)),
                None => out.extend(front),
            }
        }
        out
    }

    /// Clips every polygon of `self` against `other`.
    pub fn clip_to(&mut self, other: &Bsp) {
        for i in 0..self.nodes.len() {
            let polys = std::mem::take(&mut self.nodes[i].polys);
            if !polys.is_empty() {
                self.nodes[i].polys = other.clip_polygons(polys);
            }
        }
    }

    pub fn all_polygons(&self) -> Vec<Poly> {
        self.nodes.iter().flat_map(|n| n.polys.iter().cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_points_agree_in_both_directions() {
        let plane = Plane { normal: Vec3::new(0.3, 0.8, 0.52).normalized().unwrap(), w: 0.123 };
        let a = Vec3::new(-1.1, -0.7, 0.3);
        let b = Vec3::new(0.9, 1.3, 0.2);
        assert_eq!(split_point(a, b, &plane), split_point(b, a, &plane));
    }

    #[test]
    fn spanning_square_splits_in_two() {
        let sq = Poly::new(
            vec![
                Vec3::new(-1.0, -1.0, 0.0),
                Vec3::new(1.0, -1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(-1.0, 1.0, 0.0),
            ],
            [1.0; 3],
        )
        .unwrap();
        let plane = Plane { normal: Vec3::X, w: 0.25 };
        let mut pieces = Vec::new();
        split_polygon(&plane, sq, 1e-12, |s, p| pieces.push((matches!(s, Side::Front), p)));
        assert_eq!(pieces.len(), 2);
        let front = pieces.iter().find(|(f, _)| *f).unwrap();
        assert!(front.1.verts.iter().all(|v| v.x >= 0.25 - 1e-15));
    }
}

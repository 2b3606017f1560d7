//! Indexed polygon meshes with tolerance welding.
//!
//! The public model stores facets as free-standing polygons. Topological
//! questions (edge pairing, components, Euler characteristic) are answered on
//! an [`IndexedMesh`] obtained by welding coincident vertices.

use std::collections::HashMap;

use crate::geom::{newell_normal, Aabb, Plane, Vec3};

/// Polygons over a shared, welded vertex array.
#[derive(Clone, Debug, Default)]
pub struct IndexedMesh {
    pub verts: Vec<Vec3>,
    pub faces: Vec<Vec<u32>>,
    pub colors: Vec<[f64; 3]>,
}

/// Hash grid used to merge points closer than a tolerance.
pub(crate) struct Welder {
    tol: f64,
    cell: f64,
    grid: HashMap<[i64; 3], Vec<u32>>,
    pub verts: Vec<Vec3>,
}

impl Welder {
    pub fn new(tol: f64) -> Welder {
        let tol = tol.max(f64::MIN_POSITIVE);
        Welder { tol, cell: tol * 4.0, grid: HashMap::new(), verts: Vec::new() }
    }

    fn key(&self, p: Vec3) -> [i64; 3] {
        [
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        ]
    }

    pub fn find(&self, p: Vec3) -> Option<u32> {
        let t = Vec3::new(self.tol, self.tol, self.tol);
        let (lo, hi) = (self.key(p - t), self.key(p + t));
        let mut best: Option<(f64, u32)> = None;
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if let Some(ids) = self.grid.get(&[x, y, z]) {
                        for &id in ids {
                            let d = self.verts[id as usize].distance(p);
                            if d <= self.tol && !best.is_some_and(|(bd, _)| d >= bd) {
                                best = Some((d, id));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    pub fn insert(&mut self, p: Vec3) -> u32 {
        if let Some(id) = self.find(p) {
            return id;
        }
        let id = self.verts.len() as u32;
        self.verts.push(p);
        let k = self.key(p);
        self.grid.entry(k).or_default().push(id);
        id
    }
}

impl IndexedMesh {
    /// Welds vertices closer than `tol`, drops repeated consecutive indices and
    /// polygons left with fewer than three vertices.
    pub fn weld<'a>(
        polygons: impl IntoIterator<Item = (&'a [Vec3], [f64; 3])>,
        tol: f64,
    ) -> IndexedMesh {
        let mut w = Welder::new(tol);
        let mut faces = Vec::new();
        let mut colors = Vec::new();
        for (poly, rgb) in polygons {
            let idx: Vec<u32> = poly.iter().map(|p| w.insert(*p)).collect();
            let idx = dedup_cyclic(idx);
            if idx.len() >= 3 {
                faces.push(idx);
                colors.push(rgb);
            }
        }
        IndexedMesh { verts: w.verts, faces, colors }
    }

    pub fn face_points(&self, f: usize) -> Vec<Vec3> {
        self.faces[f].iter().map(|&i| self.verts[i as usize]).collect()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.verts.iter())
    }

    /// Directed edge multiplicities.
    pub fn directed_edges(&self) -> HashMap<(u32, u32), u32> {
        let mut m = HashMap::new();
        for f in &self.faces {
            for i in 0..f.len() {
                let a = f[i];
                let b = f[(i + 1) % f.len()];
                *m.entry((a, b)).or_insert(0) += 1;
            }
        }
        m
    }

    /// Number of directed edges lacking exactly one opposite partner.
    pub fn edge_pairing_violations(&self) -> usize {
        let m = self.directed_edges();
        m.iter()
            .filter(|(&(a, b), &c)| c != 1 || m.get(&(b, a)).copied() != Some(1))
            .count()
    }

    pub fn is_closed(&self) -> bool {
        !self.faces.is_empty() && self.edge_pairing_violations() == 0
    }

    /// Undirected edges with the faces that use them, sorted by key.
    pub fn undirected_edges(&self) -> Vec<((u32, u32), Vec<usize>)> {
        let mut m: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for i in 0..f.len() {
                let a = f[i];
                let b = f[(i + 1) % f.len()];
                m.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let mut v: Vec<_> = m.into_iter().collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len()).map(|f| polygon_signed_volume(&self.face_points(f))).sum()
    }

    /// Connected components of faces joined through shared edges.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_by(|_| true)
    }

    /// Components linked only through edges used by exactly two faces, so
    /// solids touching along an edge come apart.
    pub fn manifold_components(&self) -> Vec<Vec<usize>> {
        self.components_by(|fs| fs.len() == 2)
    }

    fn components_by(&self, link: impl Fn(&[usize]) -> bool) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.faces.len());
        for (_, fs) in self.undirected_edges() {
            if !link(&fs) {
                continue;
            }
            for w in fs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for f in 0..self.faces.len() {
            groups.entry(uf.find(f)).or_default().push(f);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }

    pub fn sub_mesh(&self, faces: &[usize]) -> IndexedMesh {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut verts = Vec::new();
        let mut out_faces = Vec::with_capacity(faces.len());
        let mut colors = Vec::with_capacity(faces.len());
        for &f in faces {
            let nf = self.faces[f]
                .iter()
                .map(|&i| {
                    *remap.entry(i).or_insert_with(|| {
                        verts.push(self.verts[i as usize]);
                        (verts.len() - 1) as u32
                    })
                })
                .collect();
            out_faces.push(nf);
            colors.push(self.colors[f]);
        }
        IndexedMesh { verts, faces: out_faces, colors }
    }

    /// `V − E + F` counted on the used vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.verts.len()];
        for f in &self.faces {
            for &i in f {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|u| **u).count() as i64;
        let e = self.undirected_edges().len() as i64;
        v - e + self.faces.len() as i64
    }

    /// Ray-parity point membership; `None` when every probe direction grazed
    /// an edge or vertex.
    pub fn contains_point(&self, p: Vec3) -> Option<bool> {
        const DIRS: [Vec3; 4] = [
            Vec3::new(0.5773502691896258, 0.6201736729460422, 0.5310850045437943),
            Vec3::new(-0.3213938048432697, 0.8830222215594891, -0.3420201433256687),
            Vec3::new(std::f64::consts::FRAC_1_SQRT_2, -0.2705980500730985, -0.6532814824381882),
            Vec3::new(-0.6123724356957945, -0.6123724356957945, 0.5),
        ];
        let tris: Vec<[Vec3; 3]> = (0..self.faces.len())
            .flat_map(|f| {
                let pts = self.face_points(f);
                (1..pts.len() - 1).map(move |i| [pts[0], pts[i], pts[i + 1]]).collect::<Vec<_>>()
            })
            .collect();
        'dirs: for d in DIRS {
            let mut crossings = 0u32;
            for t in &tris {
                match ray_triangle(p, d, t) {
                    RayHit::Miss => {}
                    RayHit::Hit => crossings += 1,
                    RayHit::Ambiguous => continue 'dirs,
                }
            }
            return Some(crossings % 2 == 1);
        }
        None
    }
}

enum RayHit {
    Miss,
    Hit,
    Ambiguous,
}

fn ray_triangle(o: Vec3, d: Vec3, t: &[Vec3; 3]) -> RayHit {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let h = d.cross(e2);
    let a = e1.dot(h);
    let scale = e1.norm() * e2.norm();
    if a.abs() <= 1e-12 * scale {
        return RayHit::Miss;
    }
    let f = 1.0 / a;
    let s = o - t[0];
    let u = f * s.dot(h);
    let q = s.cross(e1);
    let v = f * d.dot(q);
    let dist = f * e2.dot(q);
    const E: f64 = 1e-10;
    if u < -E || v < -E || u + v > 1.0 + E || dist < 0.0 {
        return RayHit::Miss;
    }
    if u < E || v < E || u + v > 1.0 - E {
        return RayHit::Ambiguous;
    }
    RayHit::Hit
}

pub(crate) fn dedup_cyclic<T: PartialEq + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.dedup();
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    v
}

/// Divergence-theorem contribution of one planar polygon.
pub fn polygon_signed_volume(pts: &[Vec3]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let o = pts[0];
    let mut s = 0.0;
    for i in 1..pts.len() - 1 {
        s += o.dot(pts[i].cross(pts[i + 1]));
    }
    s / 6.0
}

pub fn polygon_area(pts: &[Vec3]) -> f64 {
    newell_normal(pts).norm() * 0.5
}

/// Splits a simple planar polygon into triangles by ear clipping.
///
/// Collinear vertices are kept as triangle corners so that every input edge
/// survives as a triangle edge.
pub fn triangulate(pts: &[Vec3]) -> Vec<[Vec3; 3]> {
    let n = pts.len();
    if n < 3 {
        return Vec::new();
    }
    if n == 3 {
        return vec![[pts[0], pts[1], pts[2]]];
    }
    let normal = match newell_normal(pts).normalized() {
        Some(v) => v,
        None => return Vec::new(),
    };
    let (ax, ay) = plane_axes(normal);
    let p2: Vec<(f64, f64)> = pts.iter().map(|p| (p.dot(ax), p.dot(ay))).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n - 2);
    let cross = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let scale = {
        let b = Aabb::from_points(pts.iter());
        b.diagonal().max(f64::MIN_POSITIVE)
    };
    let eps = 1e-12 * scale * scale;
    let mut guard = 0;
    while idx.len() > 3 && guard < 4 * n * n {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let ia = idx[(k + m - 1) % m];
            let ib = idx[k];
            let ic = idx[(k + 1) % m];
            let (a, b, c) = (p2[ia], p2[ib], p2[ic]);
            if cross(a, b, c) <= eps {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = p2[j];
                cross(a, b, p) >= -eps && cross(b, c, p) >= -eps && cross(c, a, p) >= -eps
            });
            if blocked {
                continue;
            }
            out.push([pts[ia], pts[ib], pts[ic]]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            // Only collinear runs remain; fan out what is left.
            break;
        }
    }
    if idx.len() >= 3 {
        for k in 1..idx.len() - 1 {
            let t = [pts[idx[0]], pts[idx[k]], pts[idx[k + 1]]];
            if polygon_area(&t) > 0.0 {
                out.push(t);
            }
        }
    }
    out
}

/// Orthonormal in-plane axes `(u, v)` with `u × v = n`.
pub fn plane_axes(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let u = helper.cross(n).normalized().unwrap_or(Vec3::X);
    let v = n.cross(u);
    (u, v)
}

/// True when every interior angle turns the same way as the polygon normal.
pub fn is_convex(pts: &[Vec3]) -> bool {
    let n = newell_normal(pts);
    let len = pts.len();
    let scale = n.norm();
    for i in 0..len {
        let a = pts[i];
        let b = pts[(i + 1) % len];
        let c = pts[(i + 2) % len];
        if (b - a).cross(c - b).dot(n) < -1e-12 * scale {
            return false;
        }
    }
    true
}

/// Maximum distance of polygon vertices from its Newell plane.
pub fn planarity_deviation(pts: &[Vec3]) -> f64 {
    match Plane::from_polygon(pts) {
        Some(pl) => pts.iter().map(|p| pl.signed_distance(*p).abs()).fold(0.0, f64::max),
        None => f64::INFINITY,
    }
}

/// Whether a planar polygon's boundary crosses itself.
pub fn is_self_intersecting(pts: &[Vec3]) -> bool {
    let n = pts.len();
    if n < 4 {
        return false;
    }
    let normal = match newell_normal(pts).normalized() {
        Some(v) => v,
        None => return true,
    };
    let (ax, ay) = plane_axes(normal);
    let p: Vec<(f64, f64)> = pts.iter().map(|q| (q.dot(ax), q.dot(ay))).collect();
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let scale = Aabb::from_points(pts.iter()).diagonal();
    let eps = 1e-12 * scale * scale;
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        for j in i + 1..n {
            // Skip adjacent edges.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (p[j], p[(j + 1) % n]);
            let d1 = orient(a, b, c);
            let d2 = orient(a, b, d);
            let d3 = orient(c, d, a);
            let d4 = orient(c, d, b);
            if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
                && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
            {
                return true;
            }
        }
    }
    false
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

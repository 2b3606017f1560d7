//! Turns the polygon soup coming out of BSP clipping back into closed,
//! tidy volumes.
//!
//! Steps: weld, insert T-junction vertices, cancel opposite face pairs, merge
//! coplanar neighbours, drop collinear two-face vertices, split into shells and
//! group cavities with the shell that encloses them.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::geom::{newell_normal, Plane, Vec3};
use crate::mesh::{dedup_cyclic, IndexedMesh, UnionFind};
use crate::volume::{Facet, Volume};

pub(crate) struct RepairTolerances {
    pub weld: f64,
    pub plane: f64,
    pub volume: f64,
}

pub(crate) fn rebuild_volumes(
    polys: &[(Vec<Vec3>, [f64; 3])],
    tol: &RepairTolerances,
    name: &str,
) -> Vec<Volume> {
    let mut mesh = IndexedMesh::weld(polys.iter().map(|(v, c)| (&v[..], *c)), tol.weld);
    insert_t_junctions(&mut mesh, tol.weld);
    cancel_opposite_faces(&mut mesh);
    merge_coplanar(&mut mesh, tol.plane);
    remove_collinear(&mut mesh, tol.weld);

    let comps = mesh.manifold_components();
    let mut shells: Vec<(IndexedMesh, f64)> = comps
        .iter()
        .map(|c| {
            let m = mesh.sub_mesh(c);
            let v = m.signed_volume();
            (m, v)
        })
        .filter(|(_, v)| v.abs() > tol.volume)
        .collect();
    // Outer shells first, largest first, for a stable output order.
    shells.sort_by(|a, b| b.1.total_cmp(&a.1));
    let outer: Vec<usize> = (0..shells.len()).filter(|&i| shells[i].1 > 0.0).collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = outer.iter().map(|&i| (i, vec![i])).collect();
    for i in 0..shells.len() {
        if shells[i].1 > 0.0 {
            continue;
        }
        let probe = shells[i].0.verts[0];
        // Smallest enclosing outer shell.
        let host = outer
            .iter()
            .rev()
            .copied()
            .find(|&o| shells[o].0.bounds().contains(probe) && shells[o].0.contains_point(probe) == Some(true));
        match host {
            Some(o) => groups.get_mut(&o).unwrap().push(i),
            // An orphan cavity cannot be represented as a solid; it is
            // reported as its own (invalid) volume rather than dropped.
            None => {
                groups.insert(i, vec![i]);
            }
        }
    }
    let single = groups.len() == 1;
    groups
        .values()
        .enumerate()
        .map(|(k, members)| {
            let facets = members
                .iter()
                .flat_map(|&s| {
                    let m = &shells[s].0;
                    (0..m.faces.len()).map(move |f| Facet::new(m.face_points(f), m.colors[f]))
                })
                .collect();
            let vname = if single { name.to_string() } else { format!("{name}_{k}") };
            Volume::new(vname, facets)
        })
        .collect()
}

/// Splits every face edge at welded vertices lying on its interior.
pub(crate) fn insert_t_junctions(mesh: &mut IndexedMesh, tol: f64) {
    let mut order: Vec<u32> = (0..mesh.verts.len() as u32).collect();
    order.sort_by(|&a, &b| mesh.verts[a as usize].x.total_cmp(&mesh.verts[b as usize].x));
    let xs: Vec<f64> = order.iter().map(|&i| mesh.verts[i as usize].x).collect();
    let mut new_faces = Vec::with_capacity(mesh.faces.len());
    for f in &mesh.faces {
        let mut nf = Vec::with_capacity(f.len());
        for k in 0..f.len() {
            let (a, b) = (f[k], f[(k + 1) % f.len()]);
            nf.push(a);
            let (pa, pb) = (mesh.verts[a as usize], mesh.verts[b as usize]);
            let lo = pa.min(pb) - Vec3::new(tol, tol, tol);
            let hi = pa.max(pb) + Vec3::new(tol, tol, tol);
            let start = xs.partition_point(|&x| x < lo.x);
            let end = xs.partition_point(|&x| x <= hi.x);
            let d = pb - pa;
            let len2 = d.norm_sq();
            if len2 == 0.0 {
                continue;
            }
            let mut on_edge: Vec<(f64, u32)> = Vec::new();
            for &vi in &order[start..end] {
                if vi == a || vi == b {
                    continue;
                }
                let p = mesh.verts[vi as usize];
                if p.y < lo.y || p.y > hi.y || p.z < lo.z || p.z > hi.z {
                    continue;
                }
                let t = (p - pa).dot(d) / len2;
                if t <= 0.0 || t >= 1.0 {
                    continue;
                }
                if (pa + d * t).distance(p) <= tol {
                    on_edge.push((t, vi));
                }
            }
            on_edge.sort_by(|x, y| x.0.total_cmp(&y.0));
            nf.extend(on_edge.into_iter().map(|(_, v)| v));
        }
        new_faces.push(dedup_cyclic(nf));
    }
    mesh.faces = new_faces;
}

/// Removes pairs of faces with the same vertex cycle in opposite orders.
pub(crate) fn cancel_opposite_faces(mesh: &mut IndexedMesh) {
    let canon = |f: &[u32]| -> Vec<u32> {
        let k = (0..f.len()).min_by_key(|&i| f[i]).unwrap();
        (0..f.len()).map(|i| f[(k + i) % f.len()]).collect()
    };
    let mut index: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (i, f) in mesh.faces.iter().enumerate() {
        index.entry(canon(f)).or_default().push(i);
    }
    let mut dead = vec![false; mesh.faces.len()];
    for i in 0..mesh.faces.len() {
        if dead[i] {
            continue;
        }
        let mut rev = mesh.faces[i].clone();
        rev.reverse();
        if let Some(cands) = index.get(&canon(&rev)) {
            if let Some(&j) = cands.iter().find(|&&j| j != i && !dead[j]) {
                dead[i] = true;
                dead[j] = true;
            }
        }
    }
    retain_faces(mesh, &dead);
}

fn retain_faces(mesh: &mut IndexedMesh, dead: &[bool]) {
    let mut k = 0;
    mesh.faces.retain(|_| {
        k += 1;
        !dead[k - 1]
    });
    let mut k = 0;
    mesh.colors.retain(|_| {
        k += 1;
        !dead[k - 1]
    });
}

/// Merges edge-connected coplanar faces whose union is a simple polygon.
pub(crate) fn merge_coplanar(mesh: &mut IndexedMesh, plane_tol: f64) {
    let n = mesh.faces.len();
    let planes: Vec<Option<Plane>> = (0..n).map(|f| Plane::from_polygon(&mesh.face_points(f))).collect();
    let mut uf = UnionFind::new(n);
    for (_, fs) in mesh.undirected_edges() {
        if fs.len() != 2 {
            continue;
        }
        let (f, g) = (fs[0], fs[1]);
        let (Some(pf), Some(pg)) = (planes[f], planes[g]) else { continue };
        if pf.normal.dot(pg.normal) < 1.0 - 1e-12 {
            continue;
        }
        let close = |pl: &Plane, face: &[u32]| {
            face.iter().all(|&i| pl.signed_distance(mesh.verts[i as usize]).abs() <= plane_tol)
        };
        if close(&pf, &mesh.faces[g]) && close(&pg, &mesh.faces[f]) && mesh.colors[f] == mesh.colors[g] {
            uf.union(f, g);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for f in 0..n {
        groups.entry(uf.find(f)).or_default().push(f);
    }
    let mut out_faces = Vec::with_capacity(n);
    let mut out_colors = Vec::with_capacity(n);
    for (_, members) in groups {
        if members.len() > 1 {
            if let Some(loop_) = boundary_loop(mesh, &members) {
                out_faces.push(loop_);
                out_colors.push(mesh.colors[members[0]]);
                continue;
            }
        }
        for f in members {
            out_faces.push(mesh.faces[f].clone());
            out_colors.push(mesh.colors[f]);
        }
    }
    mesh.faces = out_faces;
    mesh.colors = out_colors;
}

/// The single outer boundary of a face group, if it is one simple loop.
fn boundary_loop(mesh: &IndexedMesh, members: &[usize]) -> Option<Vec<u32>> {
    let mut directed: HashSet<(u32, u32)> = HashSet::new();
    for &f in members {
        let face = &mesh.faces[f];
        for i in 0..face.len() {
            directed.insert((face[i], face[(i + 1) % face.len()]));
        }
    }
    let mut next: BTreeMap<u32, u32> = BTreeMap::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) && next.insert(a, b).is_some() {
            return None;
        }
    }
    let &start = next.keys().next()?;
    let mut out = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if out.len() > next.len() {
            return None;
        }
        out.push(cur);
        cur = *next.get(&cur)?;
    }
    if out.len() != next.len() || out.len() < 3 {
        return None;
    }
    // The merged polygon must keep the group's orientation.
    let pts: Vec<Vec3> = out.iter().map(|&i| mesh.verts[i as usize]).collect();
    let area: Vec3 = members.iter().map(|&f| newell_normal(&mesh.face_points(f))).fold(Vec3::ZERO, |a, b| a + b);
    let got = newell_normal(&pts);
    if (got - area).norm() > 1e-6 * area.norm() {
        return None;
    }
    Some(out)
}

/// Drops vertices that sit mid-edge between exactly two faces.
pub(crate) fn remove_collinear(mesh: &mut IndexedMesh, tol: f64) {
    loop {
        let mut users: HashMap<u32, Vec<usize>> = HashMap::new();
        for (fi, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                users.entry(v).or_default().push(fi);
            }
        }
        let neighbours = |f: &[u32], v: u32| -> Option<(u32, u32)> {
            let k = f.iter().position(|&x| x == v)?;
            Some((f[(k + f.len() - 1) % f.len()], f[(k + 1) % f.len()]))
        };
        let mut removed: Vec<u32> = Vec::new();
        let mut touched: HashSet<usize> = HashSet::new();
        let mut keys: Vec<u32> = users.keys().copied().collect();
        keys.sort_unstable();
        for v in keys {
            let fs = &users[&v];
            if fs.len() != 2 || fs[0] == fs[1] || touched.contains(&fs[0]) || touched.contains(&fs[1]) {
                continue;
            }
            let (f, g) = (fs[0], fs[1]);
            if mesh.faces[f].len() <= 3 || mesh.faces[g].len() <= 3 {
                continue;
            }
            let (Some((a, b)), Some((c, d))) = (neighbours(&mesh.faces[f], v), neighbours(&mesh.faces[g], v))
            else {
                continue;
            };
            if !(a == d && b == c) {
                continue;
            }
            let (pa, pv, pb) = (mesh.verts[a as usize], mesh.verts[v as usize], mesh.verts[b as usize]);
            let ab = pb - pa;
            let len = ab.norm();
            if len == 0.0 || (pv - pa).cross(ab).norm() / len > tol {
                continue;
            }
            let t = (pv - pa).dot(ab) / (len * len);
            if t <= 0.0 || t >= 1.0 {
                continue;
            }
            removed.push(v);
            touched.insert(f);
            touched.insert(g);
        }
        if removed.is_empty() {
            return;
        }
        let gone: HashSet<u32> = removed.into_iter().collect();
        for f in &mut mesh.faces {
            f.retain(|v| !gone.contains(v));
        }
    }
}

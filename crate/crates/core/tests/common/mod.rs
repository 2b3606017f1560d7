//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use detviz::camera::{Camera, ViewSpec};
use detviz::display::Prim;
use detviz::geom::{Aabb, Mat3, RigidTransform, Vec3};
use detviz::render::RenderOutput;
use detviz::volume::{make_box, SuperVolume, Volume};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn box_sv(name: &str, b: &Aabb) -> SuperVolume {
    let h = b.extent() * 0.5;
    SuperVolume::single(make_box(name, [h.x, h.y, h.z]).unwrap()).with_transform(RigidTransform::translation(b.center()))
}

pub fn random_box(rng: &mut ChaCha8Rng) -> Aabb {
    let c = Vec3::new(rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0));
    let h = Vec3::new(rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
    Aabb::new(c - h, c + h)
}

/// Membership in an axis-aligned box, interior only.
pub fn in_box(b: &Aabb, p: Vec3) -> bool {
    p.x > b.min.x && p.x < b.max.x && p.y > b.min.y && p.y < b.max.y && p.z > b.min.z && p.z < b.max.z
}

/// Jittered-stratified Monte-Carlo volume of a point set inside `bounds`.
pub fn mc_volume(rng: &mut ChaCha8Rng, bounds: &Aabb, samples: usize, inside: impl Fn(Vec3) -> bool) -> f64 {
    let per = (samples as f64).cbrt().round() as usize;
    let e = bounds.extent();
    let cell = Vec3::new(e.x / per as f64, e.y / per as f64, e.z / per as f64);
    let mut hits = 0usize;
    for i in 0..per {
        for j in 0..per {
            for k in 0..per {
                let p = bounds.min
                    + Vec3::new(
                        (i as f64 + rng.gen::<f64>()) * cell.x,
                        (j as f64 + rng.gen::<f64>()) * cell.y,
                        (k as f64 + rng.gen::<f64>()) * cell.z,
                    );
                if inside(p) {
                    hits += 1;
                }
            }
        }
    }
    bounds.volume() * hits as f64 / (per * per * per) as f64
}

/// A random scene of up to `max` rotated boxes around the origin.
pub fn random_scene(rng: &mut ChaCha8Rng, max: usize) -> Vec<SuperVolume> {
    let n = rng.gen_range(1..=max);
    (0..n)
        .map(|k| {
            let h = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
            let r = Mat3::from_euler_xyz(rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
            let t = Vec3::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            SuperVolume::single(make_box(&format!("b{k}"), h).unwrap())
                .with_transform(RigidTransform { rotation: r, translation: t })
        })
        .collect()
}

pub fn random_view(rng: &mut ChaCha8Rng) -> ViewSpec {
    let az: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let el: f64 = rng.gen_range(-1.2..1.2);
    let d = rng.gen_range(18.0..40.0);
    let eye = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * d;
    let f = [20.0, 35.0, 50.0, 135.0][rng.gen_range(0..4)];
    ViewSpec::new(eye, Vec3::new(rng.gen_range(-1.0..1.0), 0.0, 0.0), f).unwrap()
}

/// Point of a ray `o + t·d` on a planar polygon, if any, with its parameter.
pub fn ray_polygon(o: Vec3, d: Vec3, poly: &[Vec3]) -> Option<f64> {
    let n = {
        let mut n = Vec3::ZERO;
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            n += a.cross(b);
        }
        n
    };
    let den = n.dot(d);
    if den.abs() < 1e-14 * n.norm() * d.norm() {
        return None;
    }
    let t = n.dot(poly[0] - o) / den;
    let p = o + d * t;
    // Inside test by summing signed angles would be slow; use consistent sides.
    let mut sign = 0.0f64;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let s = (b - a).cross(p - a).dot(n);
        let rel = s / ((b - a).norm() * n.norm());
        if rel.abs() < 1e-9 {
            return None; // on the outline: not strictly inside
        }
        if sign == 0.0 {
            sign = rel.signum();
        } else if rel.signum() != sign {
            return None;
        }
    }
    Some(t)
}

/// True when the segment from the projection center to `p` crosses a facet
/// strictly before reaching `p`.
pub fn occluded(cam: &Camera, world: &[Volume], p: Vec3, slack: f64) -> bool {
    let (o, d) = match cam.focal {
        Some(_) => (cam.center, p - cam.center),
        None => (p - cam.fwd * (cam.dist * 1e3), cam.fwd * (cam.dist * 1e3)),
    };
    let len = d.norm();
    for v in world {
        for f in &v.facets {
            if let Some(t) = ray_polygon(o, d, &f.vertices) {
                if t > 0.0 && (1.0 - t) * len > slack {
                    return true;
                }
            }
        }
    }
    false
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn ccw(p: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let a: f64 = (0..p.len()).map(|i| cross2([0.0, 0.0], p[i], p[(i + 1) % p.len()])).sum();
    let mut v = p.to_vec();
    if a < 0.0 {
        v.reverse();
    }
    v
}

/// Convex polygon intersection by half-plane clipping.
pub fn overlap2(a: &[[f64; 2]], b: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let b = ccw(b);
    let mut cur = ccw(a);
    for i in 0..b.len() {
        let (e0, e1) = (b[i], b[(i + 1) % b.len()]);
        let mut out = Vec::new();
        for j in 0..cur.len() {
            let (p, q) = (cur[j], cur[(j + 1) % cur.len()]);
            let (dp, dq) = (cross2(e0, e1, p), cross2(e0, e1, q));
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        cur = out;
        if cur.len() < 3 {
            return Vec::new();
        }
    }
    cur
}

pub fn area(p: &[[f64; 2]]) -> f64 {
    0.5 * (0..p.len()).map(|i| cross2([0.0, 0.0], p[i], p[(i + 1) % p.len()])).sum::<f64>()
}

/// Distance from the projection center along the viewing ray through film
/// point `s` to the plane of a fill, computed from scratch.
pub fn ray_depth(cam: &Camera, s: [f64; 2], plane_pt: Vec3, n: Vec3) -> f64 {
    match cam.focal {
        Some(f) => {
            let d = cam.right * (s[0] / f) + cam.up * (s[1] / f) + cam.fwd;
            n.dot(plane_pt - cam.center) / n.dot(d)
        }
        None => {
            let o = cam.target + cam.right * (s[0] / cam.scale) + cam.up * (s[1] / cam.scale);
            n.dot(plane_pt - o) / n.dot(cam.fwd)
        }
    }
}

/// Pairs of fills violating back-to-front order, out of the pairs checked.
pub fn painter_violations(cam: &Camera, out: &RenderOutput, slack: f64) -> (usize, usize) {
    let polys: Vec<&Vec<[f64; 2]>> = out
        .list
        .prims
        .iter()
        .filter_map(|p| match p {
            Prim::Poly { pts, .. } => Some(pts),
            _ => None,
        })
        .collect();
    assert_eq!(polys.len(), out.fills.len());
    let (mut bad, mut checked) = (0, 0);
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            let ov = overlap2(polys[i], polys[j]);
            if ov.len() < 3 || area(&ov) < 1e-9 {
                continue;
            }
            checked += 1;
            let c = ov.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
            let c = [c[0] / ov.len() as f64, c[1] / ov.len() as f64];
            let mut samples = vec![c];
            samples.extend(ov.iter().map(|p| [0.9 * p[0] + 0.1 * c[0], 0.9 * p[1] + 0.1 * c[1]]));
            let (fi, fj) = (&out.fills[i], &out.fills[j]);
            let violated = samples.iter().any(|s| {
                let di = ray_depth(cam, *s, fi.vertices[0], fi.plane.normal);
                let dj = ray_depth(cam, *s, fj.vertices[0], fj.plane.normal);
                dj > di + slack
            });
            if violated {
                bad += 1;
            }
        }
    }
    (bad, checked)
}

/// Whether `n` random points in `region` include one strictly inside both
/// solids.
pub fn membership_overlap(
    rng: &mut ChaCha8Rng,
    region: &Aabb,
    n: usize,
    a: impl Fn(Vec3) -> bool,
    b: impl Fn(Vec3) -> bool,
) -> bool {
    if region.is_empty() {
        return false;
    }
    let e = region.extent();
    (0..n).any(|_| {
        let p = region.min + Vec3::new(rng.gen::<f64>() * e.x, rng.gen::<f64>() * e.y, rng.gen::<f64>() * e.z);
        a(p) && b(p)
    })
}

/// Interior membership of a box with half extents `h` placed by `t`.
pub fn in_oriented_box(t: &RigidTransform, h: [f64; 3], p: Vec3) -> bool {
    let q = t.inverse().apply(p);
    q.x.abs() < h[0] && q.y.abs() < h[1] && q.z.abs() < h[2]
}

/// Separating-axis test for two oriented boxes: the smallest overlap of
/// their projections over the 15 candidate axes. Positive means the
/// interiors overlap at least that deep along every axis, negative is a gap.
pub fn sat_penetration(ta: &RigidTransform, ha: [f64; 3], tb: &RigidTransform, hb: [f64; 3]) -> f64 {
    let axes = |t: &RigidTransform| -> [nalgebra::Vector3<f64>; 3] {
        let r = t.rotation.0;
        [0, 1, 2].map(|k| nalgebra::Vector3::new(r[0][k], r[1][k], r[2][k]))
    };
    let (ua, ub) = (axes(ta), axes(tb));
    let ca = nalgebra::Vector3::new(ta.translation.x, ta.translation.y, ta.translation.z);
    let cb = nalgebra::Vector3::new(tb.translation.x, tb.translation.y, tb.translation.z);
    let mut cands: Vec<nalgebra::Vector3<f64>> = ua.iter().chain(ub.iter()).copied().collect();
    for a in &ua {
        for b in &ub {
            let c = a.cross(b);
            if c.norm() > 1e-9 {
                cands.push(c.normalize());
            }
        }
    }
    cands
        .iter()
        .map(|l| {
            let ra: f64 = (0..3).map(|k| ha[k] * ua[k].dot(l).abs()).sum();
            let rb: f64 = (0..3).map(|k| hb[k] * ub[k].dot(l).abs()).sum();
            ra + rb - (cb - ca).dot(l).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Principal axis of a point set from nalgebra's symmetric eigen solver.
pub fn eigen_direction(pts: &[Vec3]) -> Vec3 {
    let n = pts.len() as f64;
    let c = pts.iter().fold(Vec3::ZERO, |a, p| a + *p) / n;
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    for p in pts {
        let d = nalgebra::Vector3::new(p.x - c.x, p.y - c.y, p.z - c.z);
        m += d * d.transpose();
    }
    let e = nalgebra::SymmetricEigen::new(m);
    let k = e.eigenvalues.imax();
    let v = e.eigenvectors.column(k);
    Vec3::new(v[0], v[1], v[2])
}

/// Angle between two lines, ignoring orientation.
pub fn line_angle(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b).abs())
}

/// An event document with one tube hit per point.
pub fn tube_event_xml(pts: &[Vec3]) -> String {
    let mut s = String::from("<event run=\"1\" number=\"1\">\n");
    for (k, p) in pts.iter().enumerate() {
        s.push_str(&format!(
            "<tubehit id=\"h{k}\" x=\"{:?}\" y=\"{:?}\" z=\"{:?}\" ax=\"1\" ay=\"0\" az=\"0\" drift=\"1\"/>\n",
            p.x, p.y, p.z
        ));
    }
    s.push_str("</event>\n");
    s
}

/// Rotation about x, then y, then z of the parent frame, from degrees.
pub fn euler_oracle(deg: [f64; 3]) -> nalgebra::Rotation3<f64> {
    nalgebra::Rotation3::from_euler_angles(deg[0].to_radians(), deg[1].to_radians(), deg[2].to_radians())
}

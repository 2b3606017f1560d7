//! Event records: hits, alignment, straight-track fit, statistics and the
//! 2D overlay drawn on top of the detector.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use roxmltree::Node;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchKind, BenchReport};
use crate::camera::{fit_view, Camera, ViewSpec};
use crate::display::{DisplayList, MarkerShape, Prim, Rgb, TRACK_RGB};
use crate::error::{Error, Result};
use crate::geom::{symmetric_eigen, Aabb, RigidTransform, Vec3};
use crate::render::polyline_prims;
use crate::xml;

/// Default residual cut for [`fit_track`], in millimetres.
pub const DEFAULT_RESIDUAL_CUT: f64 = 5.0;
/// GeV per tesla-metre of bending radius.
pub const MOMENTUM_FACTOR: f64 = 0.3;

pub const TUBE_RGB: Rgb = [0.1, 0.65, 0.2];
pub const STRIP_RGB: Rgb = [0.85, 0.5, 0.1];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeHit {
    pub id: String,
    pub chamber: Option<String>,
    pub center: Vec3,
    /// Unit wire direction.
    pub axis: Vec3,
    pub drift_radius: f64,
    pub active: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripHit {
    pub id: String,
    pub chamber: Option<String>,
    pub center: Vec3,
    /// Half-edge vectors of the strip quad.
    pub span: [Vec3; 2],
    pub active: bool,
}

/// A box of uniform magnetic field, used only for the momentum estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRegion {
    pub bounds: Aabb,
    /// Field in tesla.
    pub b: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub run: u64,
    pub number: u64,
    pub tubes: Vec<TubeHit>,
    pub strips: Vec<StripHit>,
    pub field_region: Option<FieldRegion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackFit {
    pub point: Vec3,
    /// Unit direction, oriented towards +z (ties: +x, then +y).
    pub direction: Vec3,
    /// Distance of every active hit centre from the line.
    pub residuals: Vec<(String, f64)>,
    pub hits_used: Vec<String>,
    pub momentum: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventStats {
    pub n_hits: usize,
    pub n_hits_on_track: usize,
    /// GeV, when the event carries a field region.
    pub momentum: Option<f64>,
    pub invariant_mass: Option<f64>,
}

impl EventRecord {
    pub fn hit_count(&self) -> usize {
        self.tubes.len() + self.strips.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tubes.iter().map(|h| h.id.as_str()).chain(self.strips.iter().map(|h| h.id.as_str()))
    }

    /// Ids and centres of the active hits, tubes first.
    pub fn active_points(&self) -> Vec<(&str, Vec3)> {
        let t = self.tubes.iter().filter(|h| h.active).map(|h| (h.id.as_str(), h.center));
        let s = self.strips.iter().filter(|h| h.active).map(|h| (h.id.as_str(), h.center));
        t.chain(s).collect()
    }

    /// Bounds of all hit extents.
    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        for h in &self.tubes {
            let r = Vec3::new(h.drift_radius, h.drift_radius, h.drift_radius);
            b.include(h.center - r);
            b.include(h.center + r);
        }
        for h in &self.strips {
            for p in strip_corners(h) {
                b.include(p);
            }
        }
        b
    }

    fn set_active(&self, id: &str, active: bool) -> Result<EventRecord> {
        let mut e = self.clone();
        if let Some(h) = e.tubes.iter_mut().find(|h| h.id == id) {
            h.active = active;
        } else if let Some(h) = e.strips.iter_mut().find(|h| h.id == id) {
            h.active = active;
        } else {
            return Err(Error::NotFound(format!("hit `{id}`")));
        }
        Ok(e)
    }
}

fn strip_corners(h: &StripHit) -> [Vec3; 4] {
    let [s1, s2] = h.span;
    [h.center - s1 - s2, h.center + s1 - s2, h.center + s1 + s2, h.center - s1 + s2]
}

pub fn deactivate_hit(event: &EventRecord, id: &str) -> Result<EventRecord> {
    event.set_active(id, false)
}

pub fn reactivate_hit(event: &EventRecord, id: &str) -> Result<EventRecord> {
    event.set_active(id, true)
}

// ---------------------------------------------------------------- reading

pub fn load_event(text: &str) -> Result<EventRecord> {
    load_event_aligned(text, &BTreeMap::new())
}

/// Reads an event, moving hits of each listed chamber by its transform.
pub fn load_event_aligned(text: &str, alignment: &BTreeMap<String, RigidTransform>) -> Result<EventRecord> {
    let doc = xml::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "event" {
        return Err(Error::schema(root.tag_name().name(), "expected <event> as the root element"));
    }
    xml::check_attrs(root, &["run", "number"])?;
    let mut ev = EventRecord {
        run: integer(root, "run")?,
        number: integer(root, "number")?,
        tubes: Vec::new(),
        strips: Vec::new(),
        field_region: None,
    };
    let mut seen = HashSet::new();
    for n in xml::elements(root)? {
        match n.tag_name().name() {
            "tubehit" => {
                xml::check_attrs(n, &["id", "chamber", "x", "y", "z", "ax", "ay", "az", "drift"])?;
                let axis = Vec3::new(xml::number(n, "ax")?, xml::number(n, "ay")?, xml::number(n, "az")?)
                    .normalized()
                    .ok_or_else(|| Error::schema("tubehit", format!("hit `{}` has a zero axis", id(n))))?;
                let drift = xml::number(n, "drift")?;
                if drift < 0.0 {
                    return Err(Error::schema("tubehit", format!("hit `{}` has a negative drift radius", id(n))));
                }
                ev.tubes.push(TubeHit {
                    id: unique_id(n, &mut seen)?,
                    chamber: n.attribute("chamber").map(str::to_string),
                    center: point(n, "x", "y", "z")?,
                    axis,
                    drift_radius: drift,
                    active: true,
                });
            }
            "striphit" => {
                xml::check_attrs(
                    n,
                    &["id", "chamber", "x", "y", "z", "s1x", "s1y", "s1z", "s2x", "s2y", "s2z"],
                )?;
                ev.strips.push(StripHit {
                    id: unique_id(n, &mut seen)?,
                    chamber: n.attribute("chamber").map(str::to_string),
                    center: point(n, "x", "y", "z")?,
                    span: [point(n, "s1x", "s1y", "s1z")?, point(n, "s2x", "s2y", "s2z")?],
                    active: true,
                });
            }
            "fieldregion" => {
                xml::check_attrs(n, &["B", "lo", "hi"])?;
                let b = xml::numbers::<3>(n, "B", xml::required(n, "B")?)?;
                let lo = xml::numbers::<3>(n, "lo", xml::required(n, "lo")?)?;
                let hi = xml::numbers::<3>(n, "hi", xml::required(n, "hi")?)?;
                let bounds = Aabb::new(Vec3::from(lo), Vec3::from(hi));
                if bounds.is_empty() {
                    return Err(Error::schema("fieldregion", "`lo` must not exceed `hi`"));
                }
                ev.field_region = Some(FieldRegion { bounds, b: Vec3::from(b) });
            }
            other => return Err(Error::schema(other, "unknown element inside <event>")),
        }
    }
    for h in &mut ev.tubes {
        if let Some(t) = h.chamber.as_ref().and_then(|c| alignment.get(c)) {
            h.center = t.apply(h.center);
            h.axis = t.apply_vector(h.axis);
        }
    }
    for h in &mut ev.strips {
        if let Some(t) = h.chamber.as_ref().and_then(|c| alignment.get(c)) {
            h.center = t.apply(h.center);
            h.span = h.span.map(|s| t.apply_vector(s));
        }
    }
    Ok(ev)
}

/// Reads an alignment sidecar: `<alignment>` with `<align chamber X_Y_Z rot/>`.
pub fn parse_alignment(text: &str) -> Result<BTreeMap<String, RigidTransform>> {
    let doc = xml::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "alignment" {
        return Err(Error::schema(root.tag_name().name(), "expected <alignment> as the root element"));
    }
    let mut out = BTreeMap::new();
    for n in xml::elements(root)? {
        if n.tag_name().name() != "align" {
            return Err(Error::schema(n.tag_name().name(), "unknown element inside <alignment>"));
        }
        xml::check_attrs(n, &["chamber", "X_Y_Z", "rot"])?;
        let chamber = xml::required(n, "chamber")?.to_string();
        let t = match n.attribute("X_Y_Z") {
            Some(s) => Vec3::from(xml::numbers::<3>(n, "X_Y_Z", s)?),
            None => Vec3::ZERO,
        };
        let r = match n.attribute("rot") {
            Some(s) => Vec3::from(xml::numbers::<3>(n, "rot", s)?),
            None => Vec3::ZERO,
        };
        if out.insert(chamber.clone(), RigidTransform::from_translation_euler_deg(t, r)).is_some() {
            return Err(Error::schema("align", format!("chamber `{chamber}` is aligned twice")));
        }
    }
    Ok(out)
}

/// Reads an event file and, if given, its alignment sidecar.
pub fn load_event_file(path: &Path, alignment: Option<&Path>) -> Result<EventRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let align = match alignment {
        Some(p) => parse_alignment(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => BTreeMap::new(),
    };
    load_event_aligned(&text, &align)
}

fn id<'a>(n: Node<'a, '_>) -> &'a str {
    n.attribute("id").unwrap_or("?")
}

fn unique_id(n: Node, seen: &mut HashSet<String>) -> Result<String> {
    let id = xml::required(n, "id")?.to_string();
    if !seen.insert(id.clone()) {
        return Err(Error::schema(n.tag_name().name(), format!("duplicate hit id `{id}`")));
    }
    Ok(id)
}

fn point(n: Node, x: &str, y: &str, z: &str) -> Result<Vec3> {
    Ok(Vec3::new(xml::number(n, x)?, xml::number(n, y)?, xml::number(n, z)?))
}

fn integer(n: Node, name: &str) -> Result<u64> {
    let s = xml::required(n, name)?;
    s.trim()
        .parse()
        .map_err(|_| Error::schema(n.tag_name().name(), format!("attribute `{name}`: `{s}` is not an integer")))
}

// ---------------------------------------------------------------- fitting

/// Orthogonal (total least squares) line fit through the active hit
/// centres.
///
/// The worst hit is dropped and the line refitted while its residual
/// exceeds `residual_cut` and more than two hits remain; the final
/// `hits_used` are the active hits within the cut.
pub fn fit_track(event: &EventRecord, residual_cut: f64) -> Result<TrackFit> {
    if !(residual_cut > 0.0) || !residual_cut.is_finite() {
        return Err(Error::InvalidArgument(format!("residual cut must be positive, got {residual_cut}")));
    }
    let pts = event.active_points();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!("{} active hits, need at least 2", pts.len())));
    }
    let all: Vec<Vec3> = pts.iter().map(|p| p.1).collect();
    let mut keep: Vec<usize> = (0..all.len()).collect();
    let (mut point, mut dir) = tls_line(&all, &keep)?;
    while keep.len() > 2 {
        let (k, worst) = keep
            .iter()
            .enumerate()
            .map(|(k, &i)| (k, line_distance(point, dir, all[i])))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if worst <= residual_cut {
            break;
        }
        keep.remove(k);
        (point, dir) = tls_line(&all, &keep)?;
    }
    let residuals: Vec<(String, f64)> =
        pts.iter().map(|(id, p)| (id.to_string(), line_distance(point, dir, *p))).collect();
    let hits_used = residuals.iter().filter(|r| r.1 <= residual_cut).map(|r| r.0.clone()).collect();
    Ok(TrackFit { point, direction: dir, residuals, hits_used, momentum: momentum(event) })
}

fn tls_line(all: &[Vec3], keep: &[usize]) -> Result<(Vec3, Vec3)> {
    let n = keep.len() as f64;
    let c = keep.iter().fold(Vec3::ZERO, |a, &i| a + all[i]) / n;
    let mut m = [[0.0; 3]; 3];
    let mut spread = 0.0f64;
    for &i in keep {
        let d = all[i] - c;
        spread = spread.max(d.norm());
        for r in 0..3 {
            for s in 0..3 {
                m[r][s] += d[r] * d[s];
            }
        }
    }
    let scale = keep.iter().map(|&i| all[i].norm()).fold(1.0, f64::max);
    if spread <= 1e-12 * scale {
        return Err(Error::DegenerateFit("all hits coincide".into()));
    }
    let (_, vecs) = symmetric_eigen(m);
    Ok((c, orient(vecs[0])))
}

fn orient(d: Vec3) -> Vec3 {
    let key = [d.z, d.x, d.y].into_iter().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
    if key < 0.0 {
        -d
    } else {
        d
    }
}

fn line_distance(p: Vec3, dir: Vec3, q: Vec3) -> f64 {
    (q - p).cross(dir).norm()
}

/// Bending-radius momentum from a circle fit of the active hits inside the
/// field region, projected onto the plane normal to the field.
fn momentum(event: &EventRecord) -> Option<f64> {
    let region = event.field_region?;
    let bmag = region.b.norm();
    let bhat = region.b.normalized()?;
    let e1 = (if bhat.x.abs() < 0.9 { Vec3::X } else { Vec3::Y }).cross(bhat).normalized()?;
    let e2 = bhat.cross(e1);
    let pts: Vec<[f64; 2]> = event
        .active_points()
        .into_iter()
        .filter(|(_, p)| region.bounds.contains(*p))
        .map(|(_, p)| [p.dot(e1), p.dot(e2)])
        .collect();
    let radius_mm = circle_radius(&pts)?;
    Some(MOMENTUM_FACTOR * bmag * radius_mm * 1e-3)
}

/// Algebraic (Kåsa) circle fit; `None` for fewer than three points or a
/// collinear set.
pub fn circle_radius(pts: &[[f64; 2]]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (cx, cy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p[0] / n, a.1 + p[1] / n));
    let s = pts.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).fold(0.0, f64::max);
    if s == 0.0 {
        return None;
    }
    // Solve for x² + y² + D x + E y + F = 0 in centred, scaled coordinates.
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for p in pts {
        let (x, y) = ((p[0] - cx) / s, (p[1] - cy) / s);
        let row = [x, y, 1.0];
        let rhs = -(x * x + y * y);
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
            b[i] += row[i] * rhs;
        }
    }
    let det = det3(&a);
    if det.abs() < 1e-12 * n * n * n {
        return None;
    }
    let solve = |k: usize| {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        det3(&m) / det
    };
    let (d, e, f) = (solve(0), solve(1), solve(2));
    let r2 = (d * d + e * e) / 4.0 - f;
    (r2 > 0.0).then(|| r2.sqrt() * s)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn stats(event: &EventRecord, fit: Option<&TrackFit>) -> EventStats {
    EventStats {
        n_hits: event.active_points().len(),
        n_hits_on_track: fit.map_or(0, |f| f.hits_used.len()),
        momentum: fit.and_then(|f| f.momentum),
        invariant_mass: None,
    }
}

// ---------------------------------------------------------------- overlay

fn dim(rgb: Rgb) -> Rgb {
    rgb.map(|c| 0.3 * c + 0.6)
}

/// Draws hits and the fitted track. The track is clipped to `clip` (the
/// scene bounds); an empty box falls back to the hit bounds.
pub fn event_overlay(
    event: &EventRecord,
    fit: Option<&TrackFit>,
    view: &ViewSpec,
    clip: &Aabb,
) -> Result<DisplayList> {
    let cam = view.camera()?;
    let mut list = DisplayList::new(0);
    for h in &event.tubes {
        let rgb = if h.active { TUBE_RGB } else { dim(TUBE_RGB) };
        if let Some((at, r)) = projected_disc(&cam, h.center, h.drift_radius) {
            list.prims.push(Prim::Marker { at, shape: MarkerShape::Circle, r, rgb });
        }
        let tick = (1.5 * h.drift_radius).max(5.0);
        list.prims
            .extend(polyline_prims(&cam, &[h.center - h.axis * tick, h.center + h.axis * tick], rgb, 1.0));
    }
    for h in &event.strips {
        let rgb = if h.active { STRIP_RGB } else { dim(STRIP_RGB) };
        let c = strip_corners(h);
        list.prims.extend(polyline_prims(&cam, &[c[0], c[1], c[2], c[3], c[0]], rgb, 1.0));
    }
    if let Some(f) = fit {
        let b = if clip.is_empty() { event.bounds() } else { *clip };
        if let Some((p, q)) = clip_line_to_box(f.point, f.direction, &b) {
            list.prims.extend(polyline_prims(&cam, &[p, q], TRACK_RGB, 2.0));
        }
    }
    Ok(list)
}

fn projected_disc(cam: &Camera, c: Vec3, radius: f64) -> Option<([f64; 2], f64)> {
    if cam.depth(c) <= cam.near_depth() {
        return None;
    }
    let p = cam.project_unchecked(c);
    let q = cam.project_unchecked(c + cam.up * radius);
    Some(([p.u, p.v], (q.u - p.u).hypot(q.v - p.v)))
}

/// The part of the infinite line `p + t·d` inside `b`.
pub fn clip_line_to_box(p: Vec3, d: Vec3, b: &Aabb) -> Option<(Vec3, Vec3)> {
    if b.is_empty() {
        return None;
    }
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if d[k] == 0.0 {
            if p[k] < b.min[k] || p[k] > b.max[k] {
                return None;
            }
            continue;
        }
        let (a, c) = ((b.min[k] - p[k]) / d[k], (b.max[k] - p[k]) / d[k]);
        t0 = t0.max(a.min(c));
        t1 = t1.min(a.max(c));
    }
    (t0 < t1).then(|| (p + d * t0, p + d * t1))
}

// ---------------------------------------------------------------- benchmark

/// Six chambers along a straight track, twenty hits.
pub fn synthetic_event_xml() -> String {
    let mut s = String::from("<event run=\"1\" number=\"1\">\n");
    let dir = Vec3::new(0.12, 0.05, 1.0);
    let mut k = 0;
    for ch in 0..6 {
        let z = 1000.0 * ch as f64;
        let on = dir * (z / dir.z);
        let n_tubes = if ch % 2 == 0 { 3 } else { 2 };
        for t in 0..n_tubes {
            let c = on + Vec3::new(30.0 * t as f64 - 30.0, 0.0, 30.0 * t as f64);
            s.push_str(&format!(
                "  <tubehit id=\"h{k}\" chamber=\"c{ch}\" x=\"{}\" y=\"{}\" z=\"{}\" ax=\"0\" ay=\"1\" az=\"0\" drift=\"{}\"/>\n",
                c.x, c.y, c.z, 2.0 + 1.3 * t as f64
            ));
            k += 1;
        }
        let strips = if k + 1 < 20 && ch < 5 { 1 } else { 20 - k };
        for _ in 0..strips {
            let c = on + Vec3::new(0.0, 0.0, 120.0);
            s.push_str(&format!(
                "  <striphit id=\"h{k}\" chamber=\"c{ch}\" x=\"{}\" y=\"{}\" z=\"{}\" s1x=\"400\" s1y=\"0\" s1z=\"0\" s2x=\"0\" s2y=\"15\" s2z=\"0\"/>\n",
                c.x, c.y, c.z
            ));
            k += 1;
        }
    }
    s.push_str("</event>\n");
    s
}

/// Bounds of the six synthetic chambers.
pub fn synthetic_chamber_bounds() -> Aabb {
    Aabb::new(Vec3::new(-1500.0, -1500.0, -200.0), Vec3::new(1500.0, 1500.0, 5300.0))
}

/// Mean time of load + fit + overlay over 100 synthetic events.
pub fn evd_benchmark() -> Result<BenchReport> {
    const ITER: usize = 100;
    let text = synthetic_event_xml();
    let bounds = synthetic_chamber_bounds();
    let view = fit_view(&bounds);
    let mut hits = 0;
    let t = Instant::now();
    for _ in 0..ITER {
        let ev = load_event(std::hint::black_box(&text))?;
        let fit = fit_track(&ev, DEFAULT_RESIDUAL_CUT)?;
        let list = event_overlay(&ev, Some(&fit), &view, &bounds)?;
        hits = ev.hit_count();
        std::hint::black_box(list);
    }
    Ok(BenchReport {
        kind: BenchKind::EvdLoop,
        volumes: 6,
        facets: 0,
        hits,
        iterations: ITER,
        seconds: t.elapsed().as_secs_f64() / ITER as f64,
    })
}

//! Analytic hidden-surface and hidden-line rendering.
//!
//! Front-facing facets are clipped to the view frustum, split into convex
//! pieces and ordered back to front from pairwise overlap tests; pieces that
//! pierce each other, and pieces caught in a cyclic overlap, are split along
//! the other's plane. Visible edge parts are then computed exactly by counting
//! occluders along each projected edge (quantitative invisibility) and drawn
//! over the fills.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::camera::{clip_polygon_to, clip_segment_to, Camera, ViewSpec, FRAME_HALF_HEIGHT, FRAME_HALF_WIDTH};
use crate::clash::detect_clashes;
use crate::display::{DisplayList, Prim, Rgb, CLASH_RGB};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Plane, Tolerances, Vec3};
use crate::mesh::{is_convex, triangulate, Welder};
use crate::volume::{Facet, SuperVolume};

/// Rounds of cycle splitting before falling back to farthest-first.
pub const MAX_CYCLE_ROUNDS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub fill: bool,
    pub edges: bool,
    pub light_dir: Vec3,
    pub ambient: f64,
    pub clash_overlay: bool,
    /// Color of clash loops.
    pub clash_rgb: Rgb,
}

impl Default for RenderOptions {
    fn default() -> Self {
        let l = 1.0 / 3f64.sqrt();
        RenderOptions {
            fill: true,
            edges: true,
            light_dir: Vec3::new(l, l, l),
            ambient: 0.3,
            clash_overlay: false,
            clash_rgb: CLASH_RGB,
        }
    }
}

impl RenderOptions {
    pub fn check(&self) -> Result<()> {
        if (self.light_dir.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("light direction must be a unit vector".into()));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return Err(Error::InvalidArgument(format!("ambient {} outside [0, 1]", self.ambient)));
        }
        Ok(())
    }

    /// `ambient + (1 − ambient)·|n·light|`.
    pub fn intensity(&self, n: Vec3) -> f64 {
        let k = n.dot(self.light_dir).abs().min(1.0);
        (self.ambient + (1.0 - self.ambient) * k).clamp(self.ambient, 1.0)
    }
}

/// Index of a volume in the scene: (supervolume, member volume).
pub type Owner = (usize, usize);

/// A filled convex piece as emitted, in drawing order.
#[derive(Clone, Debug, PartialEq)]
pub struct FillRecord {
    pub owner: Owner,
    pub plane: Plane,
    pub vertices: Vec<Vec3>,
}

/// A visible part of a solid edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRecord {
    pub owner: Owner,
    pub a: Vec3,
    pub b: Vec3,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RenderStats {
    pub facets: usize,
    pub culled: usize,
    pub fills: usize,
    /// Splits of pieces that pierce each other.
    pub splits: usize,
    /// Splits made to break cyclic overlaps.
    pub cycle_splits: usize,
    /// Cycles broken by the farthest-first fallback.
    pub cycle_fallbacks: usize,
    pub edges: usize,
    pub edge_segments: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RenderOutput {
    pub list: DisplayList,
    pub fills: Vec<FillRecord>,
    pub edges: Vec<EdgeRecord>,
    pub stats: RenderStats,
}

/// Renders a scene to a display list (frame number 0).
pub fn render(scene: &[SuperVolume], view: &ViewSpec, opts: &RenderOptions) -> Result<DisplayList> {
    Ok(render_detailed(scene, view, opts)?.list)
}

/// Like [`render`], also returning the 3D fills and edges behind the picture.
pub fn render_detailed(scene: &[SuperVolume], view: &ViewSpec, opts: &RenderOptions) -> Result<RenderOutput> {
    opts.check()?;
    let cam = view.camera()?;
    let mut r = Renderer::new(&cam, scene)?;
    let mut stats = RenderStats::default();
    let world: Vec<Vec<crate::volume::Volume>> = scene.iter().map(|sv| sv.world_volumes()).collect();

    let mut edges: Vec<EdgeCand> = Vec::new();
    let mut gid = 0u32;
    for (si, sv) in scene.iter().enumerate() {
        let wire = !opts.fill || !sv.style.fill;
        for (vi, v) in world[si].iter().enumerate() {
            let base = gid;
            gid += v.facets.len() as u32;
            let mut front = vec![false; v.facets.len()];
            for (fi, f) in v.facets.iter().enumerate() {
                stats.facets += 1;
                let plane = facet_plane(f, sv, v.name.as_str())?;
                front[fi] = cam.faces_viewer(f.vertices[0], plane.normal);
                if wire {
                    continue;
                }
                if !front[fi] {
                    stats.culled += 1;
                    continue;
                }
                let rgb = sv.style.base_rgb.unwrap_or(f.rgb);
                let shade = Shade { rgb, intensity: opts.intensity(plane.normal) };
                r.add_facet(f, plane, base + fi as u32, (si, vi), shade);
            }
            if opts.edges || wire {
                collect_edges(v, &front, base, (si, vi), wire, sv.style.edge_rgb, &mut edges);
            }
        }
    }

    r.order(&mut stats);
    let mut list = DisplayList::new(0);
    let mut fills = Vec::with_capacity(r.order.len());
    for &i in &r.order {
        let p = &r.pieces[i as usize];
        list.prims.push(Prim::Poly { pts: p.pts2.clone(), rgb: p.shade.rgb, i: p.shade.intensity });
        fills.push(FillRecord { owner: p.owner, plane: p.plane, vertices: p.pts3.clone() });
    }
    stats.fills = fills.len();

    let mut edge_out = Vec::new();
    stats.edges = edges.len();
    let mut scratch = EdgeScratch::default();
    for e in &edges {
        for (a, b) in r.visible_parts(e.a, e.b, &e.adj, &mut scratch) {
            let (pa, pb) = (cam.project_unchecked(a), cam.project_unchecked(b));
            list.prims.push(Prim::Line { pts: vec![[pa.u, pa.v], [pb.u, pb.v]], rgb: e.rgb, w: 1.0 });
            edge_out.push(EdgeRecord { owner: e.owner, a, b });
        }
    }
    stats.edge_segments = edge_out.len();

    if opts.clash_overlay {
        let report = detect_clashes(scene)?;
        for pair in &report.pairs {
            for l in &pair.loops {
                list.prims.extend(polyline_prims(&cam, l, opts.clash_rgb, 2.0));
            }
        }
    }
    Ok(RenderOutput { list, fills, edges: edge_out, stats })
}

/// Visible parts of a 3D segment among world-frame occluder facets.
///
/// Occluders are taken as given, whatever way they face; the result is in
/// order along the segment.
pub fn visible_edge_segments(a: Vec3, b: Vec3, occluders: &[Facet], view: &ViewSpec) -> Result<Vec<(Vec3, Vec3)>> {
    let cam = view.camera()?;
    let mut bounds = Aabb::from_points([a, b].iter());
    for f in occluders {
        bounds = bounds.union(&Aabb::from_points(f.vertices.iter()));
    }
    let mut r = Renderer::with_bounds(&cam, &bounds);
    for (k, f) in occluders.iter().enumerate() {
        let plane = f.plane().ok_or_else(|| Error::InvalidGeometry(format!("occluder {k} has no area")))?;
        r.add_facet(f, plane, k as u32, (0, 0), Shade { rgb: f.rgb, intensity: 1.0 });
    }
    r.build_grid();
    Ok(r.visible_parts(a, b, &[u32::MAX; 2], &mut EdgeScratch::default()))
}

/// Projects a 3D polyline, clipped to the view, into line primitives.
pub fn polyline_prims(cam: &Camera, pts: &[Vec3], rgb: Rgb, w: f64) -> Vec<Prim> {
    let planes = cam.clip_planes();
    let mut out = Vec::new();
    let mut run: Vec<[f64; 2]> = Vec::new();
    for s in pts.windows(2) {
        match clip_segment_to(&planes, s[0], s[1]) {
            Some((p, q)) => {
                let (pp, pq) = (cam.project_unchecked(p), cam.project_unchecked(q));
                let start = [pp.u, pp.v];
                if run.last() != Some(&start) {
                    if run.len() >= 2 {
                        out.push(Prim::Line { pts: std::mem::take(&mut run), rgb, w });
                    }
                    run = vec![start];
                }
                run.push([pq.u, pq.v]);
            }
            None => {
                if run.len() >= 2 {
                    out.push(Prim::Line { pts: std::mem::take(&mut run), rgb, w });
                }
                run.clear();
            }
        }
    }
    if run.len() >= 2 {
        out.push(Prim::Line { pts: run, rgb, w });
    }
    out
}

fn facet_plane(f: &Facet, sv: &SuperVolume, vname: &str) -> Result<Plane> {
    if f.vertices.len() < 3 || !f.vertices.iter().all(|p| p.is_finite()) {
        return Err(Error::InvalidGeometry(format!("`{}/{vname}` has a malformed facet", sv.name)));
    }
    f.plane().ok_or_else(|| Error::InvalidGeometry(format!("`{}/{vname}` has a zero-area facet", sv.name)))
}

struct EdgeCand {
    a: Vec3,
    b: Vec3,
    /// Global ids of the facets sharing the edge (`u32::MAX` when absent).
    adj: [u32; 2],
    owner: Owner,
    rgb: Rgb,
}

fn collect_edges(
    v: &crate::volume::Volume,
    front: &[bool],
    base: u32,
    owner: Owner,
    wire: bool,
    rgb: Rgb,
    out: &mut Vec<EdgeCand>,
) {
    let tol = Tolerances::for_bounds(&v.bounds()).geom;
    let mut w = Welder::new(tol);
    let mut map: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (fi, f) in v.facets.iter().enumerate() {
        let idx: Vec<u32> = f.vertices.iter().map(|p| w.insert(*p)).collect();
        for k in 0..idx.len() {
            let (i, j) = (idx[k], idx[(k + 1) % idx.len()]);
            if i != j {
                map.entry((i.min(j), i.max(j))).or_default().push(fi);
            }
        }
    }
    for ((i, j), fs) in map {
        if !wire && !fs.iter().any(|&f| front[f]) {
            continue;
        }
        let mut adj = [u32::MAX; 2];
        for (k, &f) in fs.iter().take(2).enumerate() {
            adj[k] = base + f as u32;
        }
        out.push(EdgeCand { a: w.verts[i as usize], b: w.verts[j as usize], adj, owner, rgb });
    }
}

#[derive(Clone, Copy, Debug)]
struct Shade {
    rgb: Rgb,
    intensity: f64,
}

#[derive(Clone, Debug)]
struct Piece {
    pts3: Vec<Vec3>,
    pts2: Vec<[f64; 2]>,
    plane: Plane,
    /// `nearness = k[0]·u + k[1]·v + k[2]`.
    k: [f64; 3],
    bb: [f64; 4],
    src: u32,
    owner: Owner,
    shade: Shade,
    /// Nearness of the farthest vertex.
    far: f64,
    /// Nearness of the nearest vertex.
    near: f64,
    alive: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Rel {
    None,
    /// First piece is farther: drawn first.
    Before,
    After,
    Mixed,
}

struct Renderer<'c> {
    cam: &'c Camera,
    clip: [Plane; 5],
    eps: f64,
    pieces: Vec<Piece>,
    edges: Vec<(u32, u32)>,
    order: Vec<u32>,
    grid: Grid,
    processed: usize,
    split_budget: usize,
    unresolved: usize,
}

struct Grid {
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    /// Cell range `(x0, y0)` of every inserted id.
    first: Vec<(u32, u32)>,
}

impl Grid {
    fn new(n: usize) -> Grid {
        let n = n.max(1) as f64;
        let nx = ((n * 1.5).sqrt().ceil() as usize).clamp(1, 256);
        let ny = ((n / 1.5).sqrt().ceil() as usize).clamp(1, 256);
        Grid { nx, ny, cells: vec![Vec::new(); nx * ny], first: Vec::new() }
    }

    fn range(&self, bb: &[f64; 4]) -> (usize, usize, usize, usize) {
        let fx = |u: f64| {
            let t = (u + FRAME_HALF_WIDTH) / (2.0 * FRAME_HALF_WIDTH) * self.nx as f64;
            (t.floor().max(0.0) as usize).min(self.nx - 1)
        };
        let fy = |v: f64| {
            let t = (v + FRAME_HALF_HEIGHT) / (2.0 * FRAME_HALF_HEIGHT) * self.ny as f64;
            (t.floor().max(0.0) as usize).min(self.ny - 1)
        };
        (fx(bb[0]), fy(bb[1]), fx(bb[2]), fy(bb[3]))
    }

    fn insert(&mut self, id: u32, bb: &[f64; 4]) {
        let (x0, y0, x1, y1) = self.range(bb);
        if self.first.len() <= id as usize {
            self.first.resize(id as usize + 1, (0, 0));
        }
        self.first[id as usize] = (x0 as u32, y0 as u32);
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.cells[y * self.nx + x].push(id);
            }
        }
    }

    /// Ids below `limit` whose cells meet the range of `bb`.
    fn query(&self, bb: &[f64; 4], limit: u32, out: &mut Vec<u32>) {
        out.clear();
        let (x0, y0, x1, y1) = self.range(bb);
        // Each id is reported only from the first cell it shares with the
        // query range, so no deduplication is needed.
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &id in &self.cells[y * self.nx + x] {
                    if id >= limit {
                        continue;
                    }
                    let (fx, fy) = self.first[id as usize];
                    if fx.max(x0 as u32) == x as u32 && fy.max(y0 as u32) == y as u32 {
                        out.push(id);
                    }
                }
            }
        }
    }
}

impl Grid {
    /// Ids in the cells crossed by the segment `s0 s1`, each once. `stamp`
    /// and `epoch` carry the seen-marks between calls.
    fn query_segment(&self, s0: [f64; 2], s1: [f64; 2], stamp: &mut Vec<u32>, epoch: u32, out: &mut Vec<u32>) {
        out.clear();
        if stamp.len() < self.first.len() {
            stamp.resize(self.first.len(), 0);
        }
        let ch = 2.0 * FRAME_HALF_HEIGHT / self.ny as f64;
        let (vlo, vhi) = (s0[1].min(s1[1]), s0[1].max(s1[1]));
        let (_, y0, _, y1) = self.range(&[0.0, vlo, 0.0, vhi]);
        let dv = s1[1] - s0[1];
        for y in y0..=y1 {
            // Part of the segment inside this row, with a little slack.
            let (rlo, rhi) = (-FRAME_HALF_HEIGHT + ch * y as f64, -FRAME_HALF_HEIGHT + ch * (y + 1) as f64);
            let (ulo, uhi) = if dv.abs() < 1e-12 {
                (s0[0].min(s1[0]), s0[0].max(s1[0]))
            } else {
                let ta = ((rlo - s0[1]) / dv).clamp(0.0, 1.0);
                let tb = ((rhi - s0[1]) / dv).clamp(0.0, 1.0);
                let (ua, ub) = (s0[0] + (s1[0] - s0[0]) * ta, s0[0] + (s1[0] - s0[0]) * tb);
                (ua.min(ub), ua.max(ub))
            };
            let slack = 1e-9 * FRAME_HALF_WIDTH;
            let (x0, _, x1, _) = self.range(&[ulo - slack, 0.0, uhi + slack, 0.0]);
            for x in x0..=x1 {
                for &id in &self.cells[y * self.nx + x] {
                    if stamp[id as usize] != epoch {
                        stamp[id as usize] = epoch;
                        out.push(id);
                    }
                }
            }
        }
    }
}

#[derive(Default)]
struct EdgeScratch {
    cands: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
}

fn bbox2(pts: &[[f64; 2]]) -> [f64; 4] {
    let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in pts {
        bb[0] = bb[0].min(p[0]);
        bb[1] = bb[1].min(p[1]);
        bb[2] = bb[2].max(p[0]);
        bb[3] = bb[3].max(p[1]);
    }
    bb
}

fn bb_overlap(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3]
}

fn area2(pts: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

#[inline]
fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Intersection of two counter-clockwise convex polygons, left in `cur`
/// (empty when they do not overlap). `next` is scratch.
fn convex_overlap(subject: &[[f64; 2]], clip: &[[f64; 2]], cur: &mut Vec<[f64; 2]>, next: &mut Vec<[f64; 2]>) {
    cur.clear();
    cur.extend_from_slice(subject);
    for i in 0..clip.len() {
        if cur.len() < 3 {
            cur.clear();
            return;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        next.clear();
        for j in 0..cur.len() {
            let (p, q) = (cur[j], cur[(j + 1) % cur.len()]);
            let (dp, dq) = (cross2(a, b, p), cross2(a, b, q));
            if dp >= 0.0 {
                next.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                next.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        std::mem::swap(cur, next);
    }
    if cur.len() < 3 {
        cur.clear();
    }
}

/// Min-heap key: farthest piece first, ties by id.
#[derive(PartialEq)]
struct Far(f64, u32);

impl Eq for Far {}

impl PartialOrd for Far {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Far {
    fn cmp(&self, o: &Self) -> Ordering {
        // BinaryHeap pops the maximum; smaller nearness is farther.
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl<'c> Renderer<'c> {
    fn new(cam: &'c Camera, scene: &[SuperVolume]) -> Result<Renderer<'c>> {
        let bounds = scene.iter().fold(Aabb::EMPTY, |b, sv| b.union(&sv.world_bounds()));
        Ok(Renderer::with_bounds(cam, &bounds))
    }

    fn with_bounds(cam: &'c Camera, bounds: &Aabb) -> Renderer<'c> {
        let diag = if bounds.is_empty() { cam.dist } else { bounds.diagonal().max(cam.dist * 1e-6) };
        Renderer {
            cam,
            clip: cam.clip_planes(),
            eps: Tolerances::for_diagonal(diag).geom,
            pieces: Vec::new(),
            edges: Vec::new(),
            order: Vec::new(),
            grid: Grid::new(1),
            processed: 0,
            split_budget: 0,
            unresolved: 0,
        }
    }

    fn add_facet(&mut self, f: &Facet, plane: Plane, src: u32, owner: Owner, shade: Shade) {
        let clipped = clip_polygon_to(&self.clip, &f.vertices);
        if clipped.len() < 3 {
            return;
        }
        if is_convex(&clipped) {
            self.push_piece(clipped, plane, src, owner, shade);
        } else {
            for t in triangulate(&clipped) {
                self.push_piece(t.to_vec(), plane, src, owner, shade);
            }
        }
    }

    /// Adds a convex 3D polygon; returns its id, or `None` when it is edge-on.
    fn push_piece(&mut self, pts3: Vec<Vec3>, plane: Plane, src: u32, owner: Owner, shade: Shade) -> Option<u32> {
        let k = self.cam.nearness_coefficients(&plane)?;
        let mut pts3 = pts3;
        let mut pts2: Vec<[f64; 2]> = pts3
            .iter()
            .map(|p| {
                let q = self.cam.project_unchecked(*p);
                [q.u, q.v]
            })
            .collect();
        let a = area2(&pts2);
        if a.abs() <= 1e-14 {
            return None;
        }
        if a < 0.0 {
            pts2.reverse();
            pts3.reverse();
        }
        let (far, near) = pts3.iter().map(|p| self.cam.nearness(*p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h), hi.max(h)));
        let bb = bbox2(&pts2);
        let id = self.pieces.len() as u32;
        self.pieces.push(Piece { pts3, pts2, plane, k, bb, src, owner, shade, far, near, alive: true });
        Some(id)
    }

    fn build_grid(&mut self) {
        self.grid = Grid::new(self.pieces.len() / 2);
        for i in 0..self.pieces.len() {
            let bb = self.pieces[i].bb;
            self.grid.insert(i as u32, &bb);
        }
    }

    #[inline]
    fn near_at(&self, i: usize, p: [f64; 2]) -> f64 {
        let k = &self.pieces[i].k;
        k[0] * p[0] + k[1] * p[1] + k[2]
    }

    /// Depth tolerance in nearness units around the value `h`.
    #[inline]
    fn h_tol(&self, h: f64) -> f64 {
        match self.cam.focal {
            Some(_) => self.eps * h * h,
            None => self.eps,
        }
    }

    fn relation(&self, i: usize, j: usize, ov: &mut Vec<[f64; 2]>, tmp: &mut Vec<[f64; 2]>) -> Rel {
        let (a, b) = (&self.pieces[i], &self.pieces[j]);
        if !bb_overlap(&a.bb, &b.bb) {
            return Rel::None;
        }
        convex_overlap(&a.pts2, &b.pts2, ov, tmp);
        if ov.len() < 3 || area2(ov) <= 1e-12 {
            return Rel::None;
        }
        let (mut farther, mut nearer) = (false, false);
        for p in ov.iter() {
            let (ha, hb) = (self.near_at(i, *p), self.near_at(j, *p));
            let tol = self.h_tol(ha.abs().max(hb.abs()));
            let d = ha - hb;
            if d < -tol {
                farther = true;
            } else if d > tol {
                nearer = true;
            }
        }
        match (farther, nearer) {
            (true, false) => Rel::Before,
            (false, true) => Rel::After,
            (true, true) => Rel::Mixed,
            (false, false) => Rel::None,
        }
    }

    fn straddles(&self, i: usize, plane: &Plane) -> bool {
        let (mut pos, mut neg) = (false, false);
        for p in &self.pieces[i].pts3 {
            let d = plane.signed_distance(*p);
            pos |= d > self.eps;
            neg |= d < -self.eps;
        }
        pos && neg
    }

    /// Replaces piece `i` by its parts on either side of `plane`.
    fn split(&mut self, i: usize, plane: Plane) {
        let p = self.pieces[i].clone();
        self.pieces[i].alive = false;
        for pl in [plane, plane.flipped()] {
            let part = clip_polygon_to(&[pl], &p.pts3);
            if part.len() >= 3 {
                if let Some(id) = self.push_piece(part, p.plane, p.src, p.owner, p.shade) {
                    let bb = self.pieces[id as usize].bb;
                    self.grid.insert(id, &bb);
                }
            }
        }
    }

    /// Computes relations of every piece not yet processed against all
    /// earlier pieces, splitting where pieces pierce each other.
    fn process_pending(&mut self, stats: &mut RenderStats) {
        let mut cands = Vec::new();
        let (mut ov, mut tmp) = (Vec::new(), Vec::new());
        while self.processed < self.pieces.len() {
            let i = self.processed;
            self.processed += 1;
            if !self.pieces[i].alive {
                continue;
            }
            let bb = self.pieces[i].bb;
            self.grid.query(&bb, i as u32, &mut cands);
            for &j in cands.iter() {
                let j = j as usize;
                if !self.pieces[j].alive {
                    continue;
                }
                match self.relation(i, j, &mut ov, &mut tmp) {
                    Rel::None => {}
                    Rel::Before => self.edges.push((i as u32, j as u32)),
                    Rel::After => self.edges.push((j as u32, i as u32)),
                    Rel::Mixed => {
                        if stats.splits >= self.split_budget {
                            self.unresolved += 1;
                            continue;
                        }
                        let (pi, pj) = (self.pieces[i].plane, self.pieces[j].plane);
                        if self.straddles(i, &pj) {
                            stats.splits += 1;
                            self.split(i, pj);
                            break;
                        } else if self.straddles(j, &pi) {
                            stats.splits += 1;
                            self.split(j, pi);
                        } else {
                            self.unresolved += 1;
                        }
                    }
                }
            }
        }
    }

    fn order(&mut self, stats: &mut RenderStats) {
        self.split_budget = 8 * self.pieces.len() + 1024;
        self.build_grid();
        self.process_pending(stats);
        let mut rounds = 0;
        loop {
            let n = self.pieces.len();
            let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
            let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
            let mut indeg = vec![0u32; n];
            for &(a, b) in &self.edges {
                if self.pieces[a as usize].alive && self.pieces[b as usize].alive {
                    succ[a as usize].push(b);
                    pred[b as usize].push(a);
                    indeg[b as usize] += 1;
                }
            }
            let mut heap = BinaryHeap::new();
            let mut remaining = 0usize;
            for i in 0..n {
                if self.pieces[i].alive {
                    remaining += 1;
                    if indeg[i] == 0 {
                        heap.push(Far(self.pieces[i].far, i as u32));
                    }
                }
            }
            let mut done = vec![false; n];
            let mut order = Vec::with_capacity(remaining);
            let mut split_now = false;
            while order.len() < remaining {
                let next = match heap.pop() {
                    Some(Far(_, i)) => i as usize,
                    None => {
                        if rounds < MAX_CYCLE_ROUNDS && self.break_cycle(&pred, &done, stats) {
                            rounds += 1;
                            split_now = true;
                            break;
                        }
                        stats.cycle_fallbacks += 1;
                        (0..n)
                            .filter(|&i| self.pieces[i].alive && !done[i])
                            .min_by(|&a, &b| self.pieces[a].far.total_cmp(&self.pieces[b].far).then(a.cmp(&b)))
                            .expect("remaining pieces exist")
                    }
                };
                if done[next] {
                    continue;
                }
                done[next] = true;
                order.push(next as u32);
                for &s in &succ[next] {
                    let s = s as usize;
                    indeg[s] -= 1;
                    if indeg[s] == 0 && !done[s] {
                        heap.push(Far(self.pieces[s].far, s as u32));
                    }
                }
            }
            if split_now {
                self.process_pending(stats);
                continue;
            }
            self.order = order;
            return;
        }
    }

    /// Finds a cycle among unfinished pieces and splits one of its members
    /// along a neighbour's plane. False when no member can be split.
    fn break_cycle(&mut self, pred: &[Vec<u32>], done: &[bool], stats: &mut RenderStats) -> bool {
        let n = self.pieces.len();
        let Some(start) = (0..n).find(|&i| self.pieces[i].alive && !done[i]) else { return false };
        let mut seen = vec![usize::MAX; n];
        let mut walk = Vec::new();
        let mut cur = start;
        while seen[cur] == usize::MAX {
            seen[cur] = walk.len();
            walk.push(cur);
            let Some(&p) = pred[cur].iter().find(|&&p| !done[p as usize] && self.pieces[p as usize].alive) else {
                return false;
            };
            cur = p as usize;
        }
        let cycle = &walk[seen[cur]..];
        for k in 0..cycle.len() {
            // cycle[k+1] is drawn before cycle[k].
            let (y, x) = (cycle[k], cycle[(k + 1) % cycle.len()]);
            let (px, py) = (self.pieces[x].plane, self.pieces[y].plane);
            if self.straddles(x, &py) {
                self.split(x, py);
                stats.cycle_splits += 1;
                return true;
            }
            if self.straddles(y, &px) {
                self.split(y, px);
                stats.cycle_splits += 1;
                return true;
            }
        }
        false
    }

    /// Visible parts of a segment against all live pieces except those of
    /// the facets in `skip`.
    fn visible_parts(&self, a: Vec3, b: Vec3, skip: &[u32; 2], sc: &mut EdgeScratch) -> Vec<(Vec3, Vec3)> {
        let Some((p0, p1)) = clip_segment_to(&self.clip, a, b) else { return Vec::new() };
        let (q0, q1) = (self.cam.project_unchecked(p0), self.cam.project_unchecked(p1));
        let (s0, s1) = ([q0.u, q0.v], [q1.u, q1.v]);
        let (h0, h1) = (self.cam.nearness(p0), self.cam.nearness(p1));
        let d = [s1[0] - s0[0], s1[1] - s0[1]];
        let len2 = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let thr = self.h_tol(h0.abs().max(h1.abs()));
        let bb = [s0[0].min(s1[0]), s0[1].min(s1[1]), s0[0].max(s1[0]), s0[1].max(s1[1])];
        let mut hidden: Vec<(f64, f64)> = Vec::new();
        if len2 > 1e-12 && !self.pieces.is_empty() {
            sc.epoch = sc.epoch.wrapping_add(1);
            if sc.epoch == 0 {
                sc.stamp.iter_mut().for_each(|x| *x = 0);
                sc.epoch = 1;
            }
            self.grid.query_segment(s0, s1, &mut sc.stamp, sc.epoch, &mut sc.cands);
            let edge_far = h0.min(h1) - thr;
            for &o in &sc.cands {
                let pc = &self.pieces[o as usize];
                if !pc.alive || skip.contains(&pc.src) || pc.near <= edge_far {
                    continue;
                }
                if !(bb[0] <= pc.bb[2] && pc.bb[0] <= bb[2] && bb[1] <= pc.bb[3] && pc.bb[1] <= bb[3]) {
                    continue;
                }
                // Parameter interval strictly inside the occluder outline.
                let (mut t0, mut t1) = (0.0f64, 1.0f64);
                let m = pc.pts2.len();
                for k in 0..m {
                    let (e0, e1) = (pc.pts2[k], pc.pts2[(k + 1) % m]);
                    let ex = [e1[0] - e0[0], e1[1] - e0[1]];
                    let el = (ex[0] * ex[0] + ex[1] * ex[1]).sqrt();
                    if el == 0.0 {
                        continue;
                    }
                    // Inward normal of a counter-clockwise outline.
                    let nrm = [-ex[1] / el, ex[0] / el];
                    let num = nrm[0] * (s0[0] - e0[0]) + nrm[1] * (s0[1] - e0[1]) - 1e-9;
                    let den = nrm[0] * d[0] + nrm[1] * d[1];
                    if den.abs() < 1e-300 {
                        if num <= 0.0 {
                            t0 = 1.0;
                            t1 = 0.0;
                            break;
                        }
                        continue;
                    }
                    let t = -num / den;
                    if den > 0.0 {
                        t0 = t0.max(t);
                    } else {
                        t1 = t1.min(t);
                    }
                    if t0 >= t1 {
                        break;
                    }
                }
                if t0 >= t1 {
                    continue;
                }
                // Occluder minus edge nearness is affine along the edge.
                let g = |t: f64| {
                    let s = [s0[0] + d[0] * t, s0[1] + d[1] * t];
                    pc.k[0] * s[0] + pc.k[1] * s[1] + pc.k[2] - (h0 + (h1 - h0) * t) - thr
                };
                let (g0, g1) = (g(0.0), g(1.0));
                let (ga, gb) = (g0 + (g1 - g0) * t0, g0 + (g1 - g0) * t1);
                if ga <= 0.0 && gb <= 0.0 {
                    continue;
                }
                let (mut lo, mut hi) = (t0, t1);
                if ga <= 0.0 || gb <= 0.0 {
                    let tz = g0 / (g0 - g1);
                    if ga <= 0.0 {
                        lo = lo.max(tz);
                    } else {
                        hi = hi.min(tz);
                    }
                }
                if hi > lo {
                    hidden.push((lo, hi));
                }
            }
        }
        hidden.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
        let mut visible = Vec::new();
        let mut at = 0.0f64;
        for (lo, hi) in hidden {
            if lo > at {
                visible.push((at, lo));
            }
            at = at.max(hi);
        }
        if at < 1.0 {
            visible.push((at, 1.0));
        }
        let min_len = 1e-9 * (FRAME_HALF_WIDTH * 2.0);
        visible
            .into_iter()
            .filter(|(x, y)| (y - x) * len2 > min_len || len2 <= 1e-12)
            .map(|(x, y)| (lerp_screen(p0, p1, h0, h1, x, self.cam), lerp_screen(p0, p1, h0, h1, y, self.cam)))
            .collect()
    }
}

/// 3D point at screen-space fraction `s` of a projected segment.
fn lerp_screen(p0: Vec3, p1: Vec3, h0: f64, h1: f64, s: f64, cam: &Camera) -> Vec3 {
    if s <= 0.0 {
        return p0;
    }
    if s >= 1.0 {
        return p1;
    }
    let t = match cam.focal {
        Some(_) => s * h1 / ((1.0 - s) * h0 + s * h1),
        None => s,
    };
    p0.lerp(p1, t)
}

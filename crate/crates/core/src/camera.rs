//! Viewing model: eye and target points, focal length on a 35 mm film frame,
//! the orthographic limit and the axis/φ projections, plus the navigation
//! updates driven by gauges and drags.
//!
//! Screen coordinates are millimeters on the film frame, `u` to the right in
//! `[-18, 18]` and `v` up in `[-12, 12]`.
//!
//! Changing the focal length keeps the picture of the target plane fixed: the
//! projection center slides along the view axis to distance `dist·f/35` from
//! the target, so at 35 mm it sits on the eye and as `f → ∞` the picture tends
//! to the orthographic one with scale `35/dist`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Plane, Point3, Vec3};

/// Half width of the film frame in millimeters.
pub const FRAME_HALF_WIDTH: f64 = 18.0;
/// Half height of the film frame in millimeters.
pub const FRAME_HALF_HEIGHT: f64 = 12.0;
/// The "normal" focal length.
pub const NORMAL_FOCAL_MM: f64 = 35.0;
/// Azimuth/elevation change for a drag across the full screen width.
pub const DRAG_RADIANS_PER_SCREEN: f64 = PI;
/// Elevation limit of [`drag_orbit`], short of the poles.
pub const MAX_ELEVATION: f64 = PI / 2.0 - 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Perspective,
    Isometric,
    /// Orthographic, observer on the `+x` side looking along `−x`.
    ProjXPos,
    ProjXNeg,
    ProjYPos,
    ProjYNeg,
    ProjZPos,
    ProjZNeg,
    /// Orthographic along `(−sin φ, cos φ, 0)`.
    ProjPhi(f64),
}

/// Mode selector for [`set_projection`]; φ travels separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Perspective,
    Isometric,
    ProjXPos,
    ProjXNeg,
    ProjYPos,
    ProjYNeg,
    ProjZPos,
    ProjZNeg,
    ProjPhi,
}

impl std::str::FromStr for ModeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "perspective" | "persp" => ModeKind::Perspective,
            "isometric" | "iso" => ModeKind::Isometric,
            "x+" | "xpos" | "proj_x_pos" => ModeKind::ProjXPos,
            "x-" | "xneg" | "proj_x_neg" => ModeKind::ProjXNeg,
            "y+" | "ypos" | "proj_y_pos" => ModeKind::ProjYPos,
            "y-" | "yneg" | "proj_y_neg" => ModeKind::ProjYNeg,
            "z+" | "zpos" | "proj_z_pos" => ModeKind::ProjZPos,
            "z-" | "zneg" | "proj_z_neg" => ModeKind::ProjZNeg,
            "phi" | "proj_phi" => ModeKind::ProjPhi,
            other => return Err(Error::InvalidArgument(format!("unknown projection `{other}`"))),
        })
    }
}

impl Mode {
    pub fn kind(&self) -> ModeKind {
        match self {
            Mode::Perspective => ModeKind::Perspective,
            Mode::Isometric => ModeKind::Isometric,
            Mode::ProjXPos => ModeKind::ProjXPos,
            Mode::ProjXNeg => ModeKind::ProjXNeg,
            Mode::ProjYPos => ModeKind::ProjYPos,
            Mode::ProjYNeg => ModeKind::ProjYNeg,
            Mode::ProjZPos => ModeKind::ProjZPos,
            Mode::ProjZNeg => ModeKind::ProjZNeg,
            Mode::ProjPhi(_) => ModeKind::ProjPhi,
        }
    }

    /// True for the fixed-direction projections, which lock navigation drags.
    pub fn is_projection(&self) -> bool {
        !matches!(self, Mode::Perspective | Mode::Isometric)
    }

    /// Unit vector from the target towards the observer for fixed projections.
    fn observer_side(&self) -> Option<Vec3> {
        Some(match *self {
            Mode::ProjXPos => Vec3::X,
            Mode::ProjXNeg => -Vec3::X,
            Mode::ProjYPos => Vec3::Y,
            Mode::ProjYNeg => -Vec3::Y,
            Mode::ProjZPos => Vec3::Z,
            Mode::ProjZNeg => -Vec3::Z,
            Mode::ProjPhi(phi) => Vec3::new(phi.sin(), -phi.cos(), 0.0),
            Mode::Perspective | Mode::Isometric => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub eye: Point3,
    pub target: Point3,
    /// Focal length; kept while in orthographic modes so switching back to
    /// perspective restores it.
    pub focal_mm: f64,
    pub mode: Mode,
}

/// A projected point: film coordinates and the distance along the view axis
/// in front of the eye.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projected {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Pending gauge movement, applied by `GO`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavDelta {
    pub d_eye: Vec3,
    pub d_target: Vec3,
    pub d_focal: f64,
    pub pending: bool,
}

impl Default for NavDelta {
    fn default() -> Self {
        NavDelta { d_eye: Vec3::ZERO, d_target: Vec3::ZERO, d_focal: 1.0, pending: false }
    }
}

impl NavDelta {
    /// Accumulates another gauge edit into this one.
    pub fn merge(&self, o: &NavDelta) -> NavDelta {
        NavDelta {
            d_eye: self.d_eye + o.d_eye,
            d_target: self.d_target + o.d_target,
            d_focal: self.d_focal * o.d_focal,
            pending: self.pending || o.pending,
        }
    }
}

/// Orthonormal camera frame derived from a view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub eye: Vec3,
    pub target: Vec3,
    pub fwd: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub dist: f64,
    /// `Some(f)` for perspective; `None` for every orthographic mode.
    pub focal: Option<f64>,
    /// Projection center (perspective only; equals the eye at 35 mm).
    pub center: Vec3,
    /// Film millimeters per world millimeter at the target plane.
    pub scale: f64,
}

impl ViewSpec {
    pub fn new(eye: Point3, target: Point3, focal_mm: f64) -> Result<ViewSpec> {
        let v = ViewSpec { eye, target, focal_mm, mode: Mode::Perspective };
        v.check()?;
        Ok(v)
    }

    pub fn distance(&self) -> f64 {
        self.eye.distance(self.target)
    }

    pub fn check(&self) -> Result<()> {
        if !self.eye.is_finite() || !self.target.is_finite() {
            return Err(Error::InvalidArgument("view points must be finite".into()));
        }
        if !(self.focal_mm > 0.0 && self.focal_mm.is_finite()) {
            return Err(Error::InvalidArgument(format!("focal length {} must be positive", self.focal_mm)));
        }
        if let Mode::ProjPhi(phi) = self.mode {
            if !(0.0..TAU).contains(&phi) {
                return Err(Error::InvalidArgument(format!("φ = {phi} outside [0, 2π)")));
            }
        }
        if self.distance() <= 1e-12 * self.eye.norm().max(self.target.norm()).max(1.0) {
            return Err(Error::DegenerateView);
        }
        Ok(())
    }

    pub fn camera(&self) -> Result<Camera> {
        self.check()?;
        let dist = self.distance();
        let fwd = (self.target - self.eye) / dist;
        // Screen-up is global +z projected onto the screen, or +x near the poles.
        let near_pole = fwd.cross(Vec3::Z).norm() < 1e-6;
        let right = if near_pole { fwd.cross(Vec3::X) } else { fwd.cross(Vec3::Z) };
        let right = right.normalized().ok_or(Error::DegenerateView)?;
        let up = right.cross(fwd);
        let focal = (self.mode == Mode::Perspective).then_some(self.focal_mm);
        let center = match focal {
            Some(f) => self.target - fwd * (dist * f / NORMAL_FOCAL_MM),
            None => self.eye,
        };
        Ok(Camera {
            eye: self.eye,
            target: self.target,
            fwd,
            right,
            up,
            dist,
            focal,
            center,
            scale: NORMAL_FOCAL_MM / dist,
        })
    }
}

impl Camera {
    /// Nearest depth (from the eye) at which points are still projected.
    pub fn near_depth(&self) -> f64 {
        let floor = 1e-6 * self.dist;
        match self.focal {
            Some(f) => (self.dist * (1.0 - f / NORMAL_FOCAL_MM)).max(0.0) + floor,
            None => floor,
        }
    }

    pub fn depth(&self, p: Vec3) -> f64 {
        (p - self.eye).dot(self.fwd)
    }

    /// Projects without the near-plane check. Callers must have clipped.
    #[inline]
    pub fn project_unchecked(&self, p: Vec3) -> Projected {
        let d = p - self.target;
        let (x, y) = (d.dot(self.right), d.dot(self.up));
        let depth = self.depth(p);
        match self.focal {
            Some(f) => {
                let zc = (p - self.center).dot(self.fwd);
                Projected { u: f * x / zc, v: f * y / zc, depth }
            }
            None => Projected { u: self.scale * x, v: self.scale * y, depth },
        }
    }

    /// A depth-monotone quantity that is affine in screen coordinates on any
    /// plane: `1/z` from the projection center in perspective, `−depth`
    /// orthographically. Larger means nearer.
    #[inline]
    pub fn nearness(&self, p: Vec3) -> f64 {
        match self.focal {
            Some(_) => 1.0 / (p - self.center).dot(self.fwd),
            None => -self.depth(p),
        }
    }

    /// Coefficients `(a, b, c)` with `nearness = a·u + b·v + c` for points of
    /// `plane` seen at film position `(u, v)`. `None` for edge-on planes.
    pub fn nearness_coefficients(&self, plane: &Plane) -> Option<[f64; 3]> {
        let n = plane.normal;
        match self.focal {
            Some(f) => {
                let denom = plane.w - n.dot(self.center);
                if denom.abs() < 1e-300 {
                    return None;
                }
                Some([n.dot(self.right) / f / denom, n.dot(self.up) / f / denom, n.dot(self.fwd) / denom])
            }
            None => {
                let nf = n.dot(self.fwd);
                if nf.abs() < 1e-12 {
                    return None;
                }
                // depth = (w − n·(target + right·u/s + up·v/s))/(n·fwd) + dist
                let s = self.scale;
                let c = (plane.w - n.dot(self.target)) / nf + self.dist;
                Some([n.dot(self.right) / s / nf, n.dot(self.up) / s / nf, -c])
            }
        }
    }

    /// World point on the viewing ray through `(u, v)` at the given nearness.
    pub fn unproject(&self, u: f64, v: f64, nearness: f64) -> Vec3 {
        match self.focal {
            Some(f) => {
                let z = 1.0 / nearness;
                self.center + (self.right * (u / f) + self.up * (v / f) + self.fwd) * z
            }
            None => {
                let depth = -nearness;
                self.target + self.right * (u / self.scale) + self.up * (v / self.scale)
                    + self.fwd * (depth - self.dist)
            }
        }
    }

    /// Whether a facet with outward normal `n` through `p` faces the viewer.
    pub fn faces_viewer(&self, p: Vec3, n: Vec3) -> bool {
        match self.focal {
            Some(_) => (self.center - p).dot(n) > 0.0,
            None => self.fwd.dot(n) < 0.0,
        }
    }

    /// Half-spaces `plane.signed_distance(p) ≥ 0` bounding the visible region:
    /// the near plane and the four sides of the film frame.
    pub fn clip_planes(&self) -> [Plane; 5] {
        let near = Plane::from_point_normal(self.eye + self.fwd * self.near_depth(), self.fwd);
        let side = |axis: Vec3, half: f64, sign: f64| -> Plane {
            match self.focal {
                // sign·f·(p−C)·axis ≤ half·(p−C)·fwd
                Some(f) => {
                    let n = self.fwd * half - axis * (sign * f);
                    Plane::from_point_normal(self.center, n)
                }
                None => {
                    let n = axis * (-sign);
                    Plane::from_point_normal(self.target + axis * (sign * half / self.scale), n)
                }
            }
        };
        [
            near,
            side(self.right, FRAME_HALF_WIDTH, 1.0),
            side(self.right, FRAME_HALF_WIDTH, -1.0),
            side(self.up, FRAME_HALF_HEIGHT, 1.0),
            side(self.up, FRAME_HALF_HEIGHT, -1.0),
        ]
    }

    /// Clips a 3D segment to the visible region; `None` when nothing is left.
    pub fn clip_segment(&self, a: Vec3, b: Vec3) -> Option<(Vec3, Vec3)> {
        clip_segment_to(&self.clip_planes(), a, b)
    }
}

/// Clips a segment to the intersection of half-spaces.
pub fn clip_segment_to(planes: &[Plane], a: Vec3, b: Vec3) -> Option<(Vec3, Vec3)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for pl in planes {
        let da = pl.signed_distance(a);
        let db = pl.signed_distance(b);
        if da < 0.0 && db < 0.0 {
            return None;
        }
        if da < 0.0 {
            t0 = t0.max(da / (da - db));
        } else if db < 0.0 {
            t1 = t1.min(da / (da - db));
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((a.lerp(b, t0), a.lerp(b, t1)))
}

/// Clips a convex or non-convex planar polygon to the intersection of
/// half-spaces (Sutherland–Hodgman).
pub fn clip_polygon_to(planes: &[Plane], pts: &[Vec3]) -> Vec<Vec3> {
    let mut cur = pts.to_vec();
    for pl in planes {
        if cur.len() < 3 {
            return Vec::new();
        }
        let d: Vec<f64> = cur.iter().map(|p| pl.signed_distance(*p)).collect();
        if d.iter().all(|&x| x >= 0.0) {
            continue;
        }
        let mut out = Vec::with_capacity(cur.len() + 2);
        for i in 0..cur.len() {
            let j = (i + 1) % cur.len();
            if d[i] >= 0.0 {
                out.push(cur[i]);
            }
            if (d[i] >= 0.0) != (d[j] >= 0.0) {
                let t = d[i] / (d[i] - d[j]);
                out.push(cur[i].lerp(cur[j], t));
            }
        }
        cur = out;
    }
    if cur.len() < 3 {
        Vec::new()
    } else {
        cur
    }
}

/// Direction from the target to the eye used for fitted views.
pub const DEFAULT_VIEW_DIR: Vec3 = Vec3::new(0.5, -0.8, 0.45);

/// A 35 mm perspective view of `bounds` whose bounding sphere fills the frame
/// height.
pub fn fit_view(bounds: &crate::geom::Aabb) -> ViewSpec {
    let (c, r) = if bounds.is_empty() {
        (Vec3::ZERO, 1000.0)
    } else {
        (bounds.center(), (bounds.diagonal() * 0.5).max(1.0))
    };
    let dir = DEFAULT_VIEW_DIR.normalized().expect("non-zero constant");
    let dist = NORMAL_FOCAL_MM * r / FRAME_HALF_HEIGHT;
    ViewSpec { eye: c + dir * dist, target: c, focal_mm: NORMAL_FOCAL_MM, mode: Mode::Perspective }
}

/// Maps a world point to film coordinates and depth.
///
/// In perspective the point must lie in front of the near plane, otherwise
/// [`Error::BehindCamera`] is returned and the caller is expected to clip.
pub fn project(p: Point3, view: &ViewSpec) -> Result<Projected> {
    let cam = view.camera()?;
    if cam.focal.is_some() && cam.depth(p) <= cam.near_depth() {
        return Err(Error::BehindCamera);
    }
    Ok(cam.project_unchecked(p))
}

/// Applies a gauge movement. In the fixed projections the observer stays on
/// the projection axis, on the side where the moved eye ends up.
pub fn apply_nav(view: &ViewSpec, delta: &NavDelta) -> Result<ViewSpec> {
    if !(delta.d_focal > 0.0 && delta.d_focal.is_finite()) {
        return Err(Error::InvalidArgument(format!("focal factor {} must be positive", delta.d_focal)));
    }
    let mut out = *view;
    out.eye = view.eye + delta.d_eye;
    out.target = view.target + delta.d_target;
    out.focal_mm = view.focal_mm * delta.d_focal;
    out.check()?;
    if let Some(side) = out.mode.observer_side() {
        let off = out.eye - out.target;
        let dist = off.norm();
        let mode = match out.mode {
            Mode::ProjXPos | Mode::ProjXNeg => flip_side(out.mode, off.x, Mode::ProjXPos, Mode::ProjXNeg),
            Mode::ProjYPos | Mode::ProjYNeg => flip_side(out.mode, off.y, Mode::ProjYPos, Mode::ProjYNeg),
            Mode::ProjZPos | Mode::ProjZNeg => flip_side(out.mode, off.z, Mode::ProjZPos, Mode::ProjZNeg),
            m => m,
        };
        let side = mode.observer_side().unwrap_or(side);
        out.mode = mode;
        out.eye = out.target + side * dist;
        out.check()?;
    }
    Ok(out)
}

fn flip_side(cur: Mode, component: f64, pos: Mode, neg: Mode) -> Mode {
    if component > 0.0 {
        pos
    } else if component < 0.0 {
        neg
    } else {
        cur
    }
}

/// Orbits the eye about the target by a drag measured in screen widths.
pub fn drag_orbit(view: &ViewSpec, du: f64, dv: f64) -> Result<ViewSpec> {
    if view.mode.is_projection() {
        return Err(Error::ModeLocked);
    }
    if !du.is_finite() || !dv.is_finite() {
        return Err(Error::InvalidArgument("drag amounts must be finite".into()));
    }
    view.check()?;
    if du == 0.0 && dv == 0.0 {
        return Ok(*view);
    }
    let off = view.eye - view.target;
    let r = off.norm();
    let az = off.y.atan2(off.x) + DRAG_RADIANS_PER_SCREEN * du;
    let mut el = (off.z / r).clamp(-1.0, 1.0).asin();
    if dv != 0.0 {
        el = (el + DRAG_RADIANS_PER_SCREEN * dv).clamp(-MAX_ELEVATION, MAX_ELEVATION);
    }
    let dir = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
    let mut out = *view;
    out.eye = view.target + dir * r;
    Ok(out)
}

/// Switches projection mode. `phi` must be given exactly for [`ModeKind::ProjPhi`].
pub fn set_projection(view: &ViewSpec, kind: ModeKind, phi: Option<f64>) -> Result<ViewSpec> {
    let mode = match (kind, phi) {
        (ModeKind::ProjPhi, Some(p)) if p.is_finite() => Mode::ProjPhi(p.rem_euclid(TAU)),
        (ModeKind::ProjPhi, _) => return Err(Error::InvalidArgument("φ projection needs an angle".into())),
        (_, Some(_)) => return Err(Error::InvalidArgument("an angle is only accepted with the φ projection".into())),
        (ModeKind::Perspective, None) => Mode::Perspective,
        (ModeKind::Isometric, None) => Mode::Isometric,
        (ModeKind::ProjXPos, None) => Mode::ProjXPos,
        (ModeKind::ProjXNeg, None) => Mode::ProjXNeg,
        (ModeKind::ProjYPos, None) => Mode::ProjYPos,
        (ModeKind::ProjYNeg, None) => Mode::ProjYNeg,
        (ModeKind::ProjZPos, None) => Mode::ProjZPos,
        (ModeKind::ProjZNeg, None) => Mode::ProjZNeg,
    };
    // Mode::ProjPhi(2π − tiny) can round up to 2π.
    let mode = match mode {
        Mode::ProjPhi(p) if p >= TAU => Mode::ProjPhi(0.0),
        m => m,
    };
    view.check()?;
    let mut out = *view;
    out.mode = mode;
    if let Some(side) = mode.observer_side() {
        out.eye = view.target + side * view.distance();
    }
    out.check()?;
    Ok(out)
}

//! Synthetic workloads and the timing harness.

use std::f64::consts::TAU;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::camera::{fit_view, ViewSpec};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Mat3, RigidTransform, Vec3};
use crate::render::{render, RenderOptions};
use crate::volume::{make_box, make_tube, Style, SuperVolume};

/// Volumes in the reference scene.
pub const SCENE_VOLUMES: usize = 2300;
/// Facets in the reference scene.
pub const SCENE_FACETS: usize = 15000;
/// Sides of the tubes in the synthetic scene.
const TUBE_SIDES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    RenderScene,
    EvdLoop,
}

impl std::str::FromStr for BenchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "render_scene" | "render" => Ok(BenchKind::RenderScene),
            "evd_loop" | "evd" => Ok(BenchKind::EvdLoop),
            other => Err(Error::InvalidArgument(format!("unknown benchmark `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub kind: BenchKind,
    pub volumes: usize,
    pub facets: usize,
    pub hits: usize,
    pub iterations: usize,
    /// Mean wall time of one iteration.
    pub seconds: f64,
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            BenchKind::RenderScene => write!(
                f,
                "render_scene volumes={} facets={} iterations={} seconds={:.6}",
                self.volumes, self.facets, self.iterations, self.seconds
            ),
            BenchKind::EvdLoop => write!(
                f,
                "evd_loop hits={} iterations={} seconds_per_event={:.6}",
                self.hits, self.iterations, self.seconds
            ),
        }
    }
}

/// A barrel-like arrangement of `n` volumes: chamber boxes on concentric
/// rings and a set of 12-sided tubes, in the proportion that gives about
/// 15000 facets for 2300 volumes.
pub fn synthetic_scene(n: usize) -> Vec<SuperVolume> {
    let tubes = (n * 150 + SCENE_VOLUMES / 2) / SCENE_VOLUMES;
    let boxes = n - tubes;
    let mut out = Vec::with_capacity(n);
    let sectors = 16;
    let rings = 5;
    let per_station = sectors * rings;
    let stations = boxes.div_ceil(per_station).max(1);
    let zspan = 2400.0 * stations as f64;
    for k in 0..boxes {
        let (station, rest) = (k / per_station, k % per_station);
        let (ring, sector) = (rest / sectors, rest % sectors);
        let r = 5000.0 + 1500.0 * ring as f64;
        let phi = TAU * (sector as f64 + 0.5 * (ring % 2) as f64) / sectors as f64;
        let z = -zspan / 2.0 + 2400.0 * (station as f64 + 0.5);
        let half = [250.0 + 20.0 * ring as f64, 900.0 + 200.0 * ring as f64, 1000.0];
        let t = RigidTransform {
            rotation: Mat3::rot_z(phi),
            translation: Vec3::new(r * phi.cos(), r * phi.sin(), z),
        };
        let rgb = [0.45 + 0.1 * ring as f64, 0.6, 0.75 - 0.08 * ring as f64];
        let v = make_box(&format!("c{k}"), half).expect("positive extents").with_rgb(rgb);
        out.push(SuperVolume::single(v).with_transform(t).with_style(Style::default()));
    }
    for k in 0..tubes {
        let phi = TAU * k as f64 / tubes.max(1) as f64;
        let r = 3000.0;
        let v = make_tube(&format!("t{k}"), 0.0, 150.0, zspan / 2.0, TUBE_SIDES).expect("valid tube");
        let t = RigidTransform::translation(Vec3::new(r * phi.cos(), r * phi.sin(), 0.0));
        out.push(SuperVolume::single(v.with_rgb([0.85, 0.55, 0.3])).with_transform(t));
    }
    out
}

pub fn scene_bounds(scene: &[SuperVolume]) -> Aabb {
    scene.iter().fold(Aabb::EMPTY, |b, s| b.union(&s.world_bounds()))
}

/// The fitted default view of a scene.
pub fn scene_view(scene: &[SuperVolume]) -> ViewSpec {
    fit_view(&scene_bounds(scene))
}

/// Runs one benchmark. `render_scene` times a single full render;
/// `evd_loop` averages load + overlay over 100 events.
pub fn benchmark(kind: BenchKind) -> Result<BenchReport> {
    match kind {
        BenchKind::RenderScene => {
            let scene = synthetic_scene(SCENE_VOLUMES);
            let view = scene_view(&scene);
            let opts = RenderOptions::default();
            let t = Instant::now();
            let list = render(&scene, &view, &opts)?;
            let seconds = t.elapsed().as_secs_f64();
            std::hint::black_box(list);
            Ok(BenchReport {
                kind,
                volumes: scene.iter().map(|s| s.volumes.len()).sum(),
                facets: scene.iter().map(|s| s.facet_count()).sum(),
                hits: 0,
                iterations: 1,
                seconds,
            })
        }
        BenchKind::EvdLoop => crate::event::evd_benchmark(),
    }
}

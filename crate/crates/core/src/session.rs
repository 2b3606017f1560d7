//! The live session behind the command window and the wire protocol.
//!
//! Commands are single lines, verb first, case-insensitive verbs:
//!
//! ```text
//! LOAD <agdd-path>            RELOAD
//! SELECT <node-path | #id>    DEPLOY <node-path | #id>    TREE_TOGGLE <id>    TREE
//! BOX <name> <x> <y> <z>      TRD <name> <x1> <x2> <y1> <y2> <z>
//! TUBS <name> <rin> <rout> <z> [nphi]
//! PLACE <name> <x> <y> <z> [<rx> <ry> <rz>]    DELETE <name>
//! BOOL <union|addition|subtraction|intersection> <a> <b> <out>
//! VIEW EYE <x> <y> <z> | TARGET <x> <y> <z> | FOCAL <mm> | PROJ <mode> [phi°] | FIT
//! GAUGE EYE <dx> <dy> <dz> | TARGET <dx> <dy> <dz> | FOCAL <factor>
//! GO [<dex> <dey> <dez> <dtx> <dty> <dtz> <focal-factor>]
//! DRAG <du> <dv>
//! EVENT LOAD <path> [alignment-path] | FIT [cut] | REMOVE <id> | RESTORE <id>
//!       | FIELD <bx> <by> <bz> <x0> <y0> <z0> <x1> <y1> <z1> | STATS | CLEAR
//! HIT_REMOVE <id>
//! FIELD LATTICE <x0> <y0> <z0> <x1> <y1> <z1> <nx> <ny> <nz>
//!       | TOROID <B0> <R0> <Rin> <Rout> | SCALE <mm-per-T | AUTO> | OFF
//! SET FILL|EDGES|CLASH <ON|OFF>    SET AMBIENT <a>
//! CLASH    RENDER    EXPORT SVG|EPS <path>    BENCH <render_scene|evd_loop>    HELP
//! ```
//!
//! Box, trd and tubs sizes are full lengths as in AGDD documents.

use std::path::Path;

use serde::Serialize;

use crate::agdd::{self, GeometryTree, NodeId, NodeKind, Shape, TreeNode};
use crate::bench::{benchmark, BenchKind};
use crate::camera::{apply_nav, drag_orbit, fit_view, set_projection, Mode, ModeKind, NavDelta, ViewSpec};
use crate::clash::detect_clashes;
use crate::csg::{boolean_named, BooleanOpKind};
use crate::display::{DisplayList, Prim};
use crate::error::{Error, Result};
use crate::event::{self, EventRecord, FieldRegion, TrackFit, DEFAULT_RESIDUAL_CUT};
use crate::export::{self, Format};
use crate::field::{default_scale, field_overlay, sample_field, LatticeSpec, ToroidField};
use crate::geom::{Aabb, RigidTransform, Vec3};
use crate::render::{render, RenderOptions};
use crate::volume::SuperVolume;

/// The shipped stand-in field: 1 T at 5 m in a 4.3–10 m shell.
pub const DEFAULT_TOROID: ToroidField = ToroidField { b0: 1.0, r0: 5000.0, r_in: 4300.0, r_out: 10000.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSettings {
    pub toroid: ToroidField,
    /// No arrows are drawn until a lattice is set.
    pub lattice: Option<LatticeSpec>,
    /// Millimetres per tesla; `None` picks [`default_scale`].
    pub scale: Option<f64>,
}

impl Default for FieldSettings {
    fn default() -> Self {
        FieldSettings { toroid: DEFAULT_TOROID, lattice: None, scale: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    /// Volumes made by commands.
    pub scene: Vec<SuperVolume>,
    pub tree: Option<GeometryTree>,
    /// Volumes instantiated from the tree selection.
    pub geometry: Vec<SuperVolume>,
    pub event: Option<EventRecord>,
    pub fit: Option<TrackFit>,
    /// Cut used by the last `EVENT FIT`, reused on refits.
    pub residual_cut: f64,
    pub field: FieldSettings,
    pub view: ViewSpec,
    pub options: RenderOptions,
    pub frame_counter: u64,
    pub pending: NavDelta,
    cache: Option<Vec<Prim>>,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

fn num(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("`{tok}` is not a number")))
}

fn nums<const N: usize>(toks: &[&str]) -> Result<[f64; N]> {
    if toks.len() != N {
        return Err(Error::InvalidArgument(format!("expected {N} numbers, got {}", toks.len())));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(toks) {
        *o = num(t)?;
    }
    Ok(out)
}

fn vec3(toks: &[&str]) -> Result<Vec3> {
    Ok(Vec3::from(nums::<3>(toks)?))
}

fn on_off(tok: Option<&&str>) -> Result<bool> {
    match tok.map(|t| t.to_ascii_uppercase()).as_deref() {
        Some("ON") | Some("1") | Some("TRUE") => Ok(true),
        Some("OFF") | Some("0") | Some("FALSE") => Ok(false),
        _ => Err(Error::InvalidArgument("expected ON or OFF".into())),
    }
}

fn arg<'a>(toks: &[&'a str], k: usize, what: &str) -> Result<&'a str> {
    toks.get(k).copied().ok_or_else(|| Error::InvalidArgument(format!("missing {what}")))
}

fn op_kind(s: &str) -> Result<BooleanOpKind> {
    match s.to_ascii_lowercase().as_str() {
        "union" | "addition" | "add" => Ok(BooleanOpKind::Addition),
        "subtraction" | "subtract" | "sub" => Ok(BooleanOpKind::Subtraction),
        "intersection" | "intersect" => Ok(BooleanOpKind::Intersection),
        other => Err(Error::InvalidArgument(format!("unknown boolean kind `{other}`"))),
    }
}

#[derive(Serialize)]
struct TreeView<'a> {
    id: NodeId,
    name: &'a str,
    kind: &'static str,
    deployed: bool,
    selected: bool,
    children: Vec<TreeView<'a>>,
}

fn tree_view(n: &TreeNode) -> TreeView<'_> {
    TreeView {
        id: n.id,
        name: &n.name,
        kind: match n.kind {
            NodeKind::Document => "document",
            NodeKind::Section => "section",
            NodeKind::Primitive(Shape::Box { .. }) => "box",
            NodeKind::Primitive(Shape::Trd { .. }) => "trd",
            NodeKind::Primitive(Shape::Tubs { .. }) => "tubs",
            NodeKind::Composition => "composition",
            NodeKind::Boolean { .. } => "boolean",
        },
        deployed: n.deployed,
        selected: n.selected,
        children: n.children.iter().map(tree_view).collect(),
    }
}

impl Session {
    pub fn new() -> Session {
        Session {
            scene: Vec::new(),
            tree: None,
            geometry: Vec::new(),
            event: None,
            fit: None,
            residual_cut: DEFAULT_RESIDUAL_CUT,
            field: FieldSettings::default(),
            view: fit_view(&Aabb::EMPTY),
            options: RenderOptions::default(),
            frame_counter: 0,
            pending: NavDelta::default(),
            cache: None,
        }
    }

    /// Runs one command on a copy of the session. On error the session is
    /// left untouched by construction.
    pub fn execute(&self, line: &str) -> Result<(Session, String)> {
        let mut s = self.clone();
        let text = s.run(line)?;
        Ok((s, text))
    }

    /// Like [`Session::execute`], replacing `self` on success.
    pub fn apply(&mut self, line: &str) -> Result<String> {
        let (s, text) = self.execute(line)?;
        *self = s;
        Ok(text)
    }

    /// Command-made and tree-selected volumes, in drawing order.
    pub fn drawn(&self) -> Vec<SuperVolume> {
        self.scene.iter().chain(&self.geometry).cloned().collect()
    }

    pub fn bounds(&self) -> Aabb {
        self.scene.iter().chain(&self.geometry).fold(Aabb::EMPTY, |b, s| b.union(&s.world_bounds()))
    }

    /// Hidden-line picture, event and field overlays, with the next frame
    /// number. The picture is cached until the session content changes.
    pub fn render_frame(&mut self) -> Result<DisplayList> {
        let prims = match &self.cache {
            Some(p) => p.clone(),
            None => {
                let p = self.compose()?;
                self.cache = Some(p.clone());
                p
            }
        };
        self.frame_counter += 1;
        Ok(DisplayList { frame: self.frame_counter, prims })
    }

    fn compose(&self) -> Result<Vec<Prim>> {
        let drawn = self.drawn();
        let mut prims = Vec::new();
        if !drawn.is_empty() {
            prims = render(&drawn, &self.view, &self.options)?.prims;
        }
        if let Some(ev) = &self.event {
            prims.extend(event::event_overlay(ev, self.fit.as_ref(), &self.view, &self.bounds())?.prims);
        }
        if let Some(lat) = &self.field.lattice {
            let samples = sample_field(&self.field.toroid, lat)?;
            let scale = self.field.scale.unwrap_or_else(|| default_scale(&samples, lat));
            prims.extend(field_overlay(&samples, &self.view, scale)?.prims);
        }
        Ok(prims)
    }

    pub fn tree_json(&self) -> String {
        #[derive(Serialize)]
        struct Snapshot<'a> {
            #[serde(rename = "type")]
            kind: &'static str,
            revision: Option<u64>,
            root: Option<TreeView<'a>>,
        }
        let s = Snapshot {
            kind: "tree",
            revision: self.tree.as_ref().map(|t| t.revision),
            root: self.tree.as_ref().map(|t| tree_view(&t.root)),
        };
        serde_json::to_string(&s).expect("tree snapshot serializes")
    }

    pub fn stats_json(&self) -> String {
        #[derive(Serialize)]
        struct Snapshot {
            #[serde(rename = "type")]
            kind: &'static str,
            stats: Option<event::EventStats>,
        }
        let s = Snapshot { kind: "stats", stats: self.event.as_ref().map(|e| event::stats(e, self.fit.as_ref())) };
        serde_json::to_string(&s).expect("stats snapshot serializes")
    }

    fn reinstantiate(&mut self) -> Result<()> {
        self.geometry = match &self.tree {
            Some(t) => agdd::instantiate_selected(t)?,
            None => Vec::new(),
        };
        Ok(())
    }

    fn node_ref(&self, s: &str) -> Result<NodeId> {
        let t = self.tree.as_ref().ok_or_else(|| Error::InvalidArgument("no geometry loaded".into()))?;
        let id = match s.strip_prefix('#') {
            Some(n) => n.parse::<NodeId>().map_err(|_| Error::InvalidArgument(format!("bad node id `{s}`")))?,
            None => match s.parse::<NodeId>() {
                Ok(id) if t.find_path(s).is_none() => id,
                _ => t.find_path(s).ok_or_else(|| Error::NotFound(format!("tree path `{s}`")))?,
            },
        };
        t.node(id).map(|n| n.id).ok_or_else(|| Error::NotFound(format!("tree node {id}")))
    }

    fn scene_index(&self, name: &str) -> Result<usize> {
        self.scene
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::NotFound(format!("volume `{name}`")))
    }

    fn add_volume(&mut self, sv: SuperVolume) -> Result<()> {
        if self.scene.iter().any(|s| s.name == sv.name) {
            return Err(Error::InvalidArgument(format!("volume `{}` already exists", sv.name)));
        }
        self.scene.push(sv);
        Ok(())
    }

    fn event_mut(&mut self) -> Result<&mut EventRecord> {
        self.event.as_mut().ok_or_else(|| Error::InvalidArgument("no event loaded".into()))
    }

    /// Refits after a hit change when a track was shown; a fit that is no
    /// longer possible is dropped.
    fn refit(&mut self) -> String {
        if self.fit.is_none() {
            return String::new();
        }
        let ev = self.event.as_ref().expect("fit implies event");
        match event::fit_track(ev, self.residual_cut) {
            Ok(f) => {
                let text = format!(", refit on {} hits", f.hits_used.len());
                self.fit = Some(f);
                text
            }
            Err(e) => {
                self.fit = None;
                format!(", track dropped ({e})")
            }
        }
    }

    fn run(&mut self, line: &str) -> Result<String> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(String::new());
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let verb = toks[0].to_ascii_uppercase();
        let rest = &toks[1..];
        let tail = line[toks[0].len()..].trim();
        let keeps_picture = matches!(verb.as_str(), "RENDER" | "EXPORT" | "BENCH" | "TREE" | "HELP" | "CLASH" | "DEPLOY" | "TREE_TOGGLE")
            || (verb == "EVENT" && rest.first().map(|s| s.eq_ignore_ascii_case("STATS")) == Some(true))
            || verb == "GAUGE";
        let text = match verb.as_str() {
            "LOAD" => {
                if tail.is_empty() {
                    return Err(Error::InvalidArgument("LOAD needs a path".into()));
                }
                let t = agdd::load_agdd(Path::new(tail))?;
                let n = t.node_count();
                self.tree = Some(t);
                self.reinstantiate()?;
                format!("loaded {n} nodes")
            }
            "RELOAD" => {
                let t = self.tree.as_ref().ok_or_else(|| Error::InvalidArgument("no geometry loaded".into()))?;
                let t = agdd::reload(t)?;
                let r = t.revision;
                self.tree = Some(t);
                self.reinstantiate()?;
                format!("reloaded revision {r}, {} volumes selected", self.geometry.len())
            }
            "SELECT" => {
                let id = self.node_ref(tail)?;
                let t = agdd::toggle_select(self.tree.as_ref().expect("checked"), id)?;
                let on = t.node(id).expect("exists").selected;
                self.tree = Some(t);
                self.reinstantiate()?;
                format!("{} node {id}, {} volumes selected", if on { "selected" } else { "deselected" }, self.geometry.len())
            }
            "DEPLOY" | "TREE_TOGGLE" => {
                let id = self.node_ref(tail)?;
                let t = agdd::toggle_deploy(self.tree.as_ref().expect("checked"), id)?;
                let on = t.node(id).expect("exists").deployed;
                self.tree = Some(t);
                format!("{} node {id}", if on { "deployed" } else { "collapsed" })
            }
            "TREE" => self.tree_json(),
            "BOX" | "TRD" | "TUBS" => {
                let name = arg(rest, 0, "volume name")?;
                let p = &rest[1..];
                let shape = match verb.as_str() {
                    "BOX" => {
                        let [x, y, z] = nums::<3>(p)?;
                        Shape::Box { x, y, z }
                    }
                    "TRD" => {
                        let [x1, x2, y1, y2, z] = nums::<5>(p)?;
                        Shape::Trd { x1, x2, y1, y2, z }
                    }
                    _ => {
                        let (dims, nphi) = match p.len() {
                            3 => (p, crate::volume::DEFAULT_SIDES),
                            4 => (
                                &p[..3],
                                p[3].parse::<usize>()
                                    .map_err(|_| Error::InvalidArgument(format!("`{}` is not a side count", p[3])))?,
                            ),
                            n => return Err(Error::InvalidArgument(format!("TUBS takes 3 or 4 numbers, got {n}"))),
                        };
                        let [rin, rout, z] = nums::<3>(dims)?;
                        Shape::Tubs { rin, rout, z, nphi }
                    }
                };
                let v = shape.build(name)?;
                self.add_volume(SuperVolume::single(v))?;
                format!("added {name}")
            }
            "PLACE" => {
                let name = arg(rest, 0, "volume name")?;
                let i = self.scene_index(name)?;
                let p = &rest[1..];
                let (t, r) = match p.len() {
                    3 => (vec3(p)?, Vec3::ZERO),
                    6 => (vec3(&p[..3])?, vec3(&p[3..])?),
                    n => return Err(Error::InvalidArgument(format!("PLACE takes 3 or 6 numbers, got {n}"))),
                };
                self.scene[i].transform = RigidTransform::from_translation_euler_deg(t, r);
                format!("placed {name}")
            }
            "DELETE" => {
                let name = arg(rest, 0, "volume name")?;
                let i = self.scene_index(name)?;
                self.scene.remove(i);
                format!("deleted {name}")
            }
            "BOOL" => {
                if rest.len() != 4 {
                    return Err(Error::InvalidArgument("BOOL <kind> <a> <b> <out>".into()));
                }
                let kind = op_kind(rest[0])?;
                let a = &self.scene[self.scene_index(rest[1])?];
                let b = &self.scene[self.scene_index(rest[2])?];
                let out = boolean_named(a, b, kind, rest[3])?;
                let n = out.volumes.len();
                self.add_volume(out)?;
                format!("{} = {} {kind} {} ({n} solids)", rest[3], rest[1], rest[2])
            }
            "VIEW" => {
                let sub = arg(rest, 0, "VIEW subcommand")?.to_ascii_uppercase();
                let p = &rest[1..];
                let mut v = self.view;
                match sub.as_str() {
                    "EYE" => v.eye = vec3(p)?,
                    "TARGET" => v.target = vec3(p)?,
                    "FOCAL" => v.focal_mm = nums::<1>(p)?[0],
                    "PROJ" => {
                        let kind: ModeKind = arg(p, 0, "projection mode")?.parse()?;
                        let phi = match p.len() {
                            1 => None,
                            2 => Some(num(p[1])?.to_radians()),
                            _ => return Err(Error::InvalidArgument("VIEW PROJ <mode> [phi]".into())),
                        };
                        v = set_projection(&v, kind, phi)?;
                    }
                    "FIT" => {
                        let mode = v.mode;
                        v = fit_view(&self.bounds());
                        if mode != Mode::Perspective {
                            v = match mode {
                                Mode::ProjPhi(phi) => set_projection(&v, ModeKind::ProjPhi, Some(phi))?,
                                m => set_projection(&v, m.kind(), None)?,
                            };
                        }
                    }
                    other => return Err(Error::InvalidArgument(format!("unknown VIEW subcommand `{other}`"))),
                }
                v.check()?;
                // Fixed projections keep the eye on their axis.
                if v.mode.is_projection() && sub != "PROJ" {
                    v = match v.mode {
                        Mode::ProjPhi(phi) => set_projection(&v, ModeKind::ProjPhi, Some(phi))?,
                        m => set_projection(&v, m.kind(), None)?,
                    };
                }
                self.view = v;
                format!("view {}", sub.to_lowercase())
            }
            "GAUGE" => {
                let sub = arg(rest, 0, "GAUGE subcommand")?.to_ascii_uppercase();
                let p = &rest[1..];
                let mut d = NavDelta { pending: true, ..NavDelta::default() };
                match sub.as_str() {
                    "EYE" => d.d_eye = vec3(p)?,
                    "TARGET" => d.d_target = vec3(p)?,
                    "FOCAL" => {
                        let f = nums::<1>(p)?[0];
                        if f <= 0.0 {
                            return Err(Error::InvalidArgument(format!("focal factor {f} must be positive")));
                        }
                        d.d_focal = f;
                    }
                    other => return Err(Error::InvalidArgument(format!("unknown GAUGE subcommand `{other}`"))),
                }
                self.pending = self.pending.merge(&d);
                "pending".into()
            }
            "GO" => {
                // A client may send its whole gauge state with GO.
                match rest.len() {
                    0 => {}
                    7 => {
                        let v = nums::<7>(rest)?;
                        let d = NavDelta {
                            d_eye: Vec3::new(v[0], v[1], v[2]),
                            d_target: Vec3::new(v[3], v[4], v[5]),
                            d_focal: v[6],
                            pending: true,
                        };
                        self.pending = self.pending.merge(&d);
                    }
                    n => return Err(Error::InvalidArgument(format!("GO takes 0 or 7 numbers, got {n}"))),
                }
                if !self.pending.pending {
                    "nothing pending".into()
                } else {
                    self.view = apply_nav(&self.view, &self.pending)?;
                    self.pending = NavDelta::default();
                    "moved".into()
                }
            }
            "DRAG" => {
                let [du, dv] = nums::<2>(rest)?;
                self.view = drag_orbit(&self.view, du, dv)?;
                "orbited".into()
            }
            "HIT_REMOVE" => {
                let id = arg(rest, 0, "hit id")?;
                let ev = event::deactivate_hit(self.event_mut()?, id)?;
                self.event = Some(ev);
                format!("removed {id}{}", self.refit())
            }
            "EVENT" => {
                let sub = arg(rest, 0, "EVENT subcommand")?.to_ascii_uppercase();
                let p = &rest[1..];
                match sub.as_str() {
                    "LOAD" => {
                        let path = arg(p, 0, "event path")?;
                        let align = p.get(1).map(Path::new);
                        let ev = event::load_event_file(Path::new(path), align)?;
                        let n = ev.hit_count();
                        self.event = Some(ev);
                        self.fit = None;
                        format!("event loaded, {n} hits")
                    }
                    "FIT" => {
                        let cut = match p.len() {
                            0 => DEFAULT_RESIDUAL_CUT,
                            1 => num(p[0])?,
                            _ => return Err(Error::InvalidArgument("EVENT FIT [cut]".into())),
                        };
                        let ev = self.event.as_ref().ok_or_else(|| Error::InvalidArgument("no event loaded".into()))?;
                        let f = event::fit_track(ev, cut)?;
                        let d = f.direction;
                        let text = format!("track on {} hits, direction {} {} {}", f.hits_used.len(), d.x, d.y, d.z);
                        self.fit = Some(f);
                        self.residual_cut = cut;
                        text
                    }
                    "REMOVE" | "RESTORE" => {
                        let id = arg(p, 0, "hit id")?;
                        let ev = self.event_mut()?;
                        let ev =
                            if sub == "REMOVE" { event::deactivate_hit(ev, id)? } else { event::reactivate_hit(ev, id)? };
                        self.event = Some(ev);
                        format!("{} {id}{}", if sub == "REMOVE" { "removed" } else { "restored" }, self.refit())
                    }
                    "FIELD" => {
                        let v = nums::<9>(p)?;
                        let bounds = Aabb::new(Vec3::new(v[3], v[4], v[5]), Vec3::new(v[6], v[7], v[8]));
                        if bounds.is_empty() {
                            return Err(Error::InvalidArgument("field region lo must not exceed hi".into()));
                        }
                        self.event_mut()?.field_region = Some(FieldRegion { bounds, b: Vec3::new(v[0], v[1], v[2]) });
                        format!("field region set{}", self.refit())
                    }
                    "STATS" => self.stats_json(),
                    "CLEAR" => {
                        self.event = None;
                        self.fit = None;
                        "event cleared".into()
                    }
                    other => return Err(Error::InvalidArgument(format!("unknown EVENT subcommand `{other}`"))),
                }
            }
            "FIELD" => {
                let sub = arg(rest, 0, "FIELD subcommand")?.to_ascii_uppercase();
                let p = &rest[1..];
                match sub.as_str() {
                    "LATTICE" => {
                        if p.len() != 9 {
                            return Err(Error::InvalidArgument("FIELD LATTICE x0 y0 z0 x1 y1 z1 nx ny nz".into()));
                        }
                        let mut counts = [0usize; 3];
                        for (c, t) in counts.iter_mut().zip(&p[6..]) {
                            *c = t.parse().map_err(|_| Error::InvalidArgument(format!("`{t}` is not a count")))?;
                        }
                        let l = LatticeSpec::new(vec3(&p[..3])?, vec3(&p[3..6])?, counts)?;
                        self.field.lattice = Some(l);
                        format!("lattice of {} points", l.len())
                    }
                    "TOROID" => {
                        let [b0, r0, rin, rout] = nums::<4>(p)?;
                        self.field.toroid = ToroidField::new(b0, r0, rin, rout)?;
                        "toroid set".into()
                    }
                    "SCALE" => {
                        let t = arg(p, 0, "scale")?;
                        if t.eq_ignore_ascii_case("AUTO") {
                            self.field.scale = None;
                        } else {
                            let s = num(t)?;
                            if s <= 0.0 {
                                return Err(Error::InvalidArgument(format!("scale {s} must be positive")));
                            }
                            self.field.scale = Some(s);
                        }
                        "scale set".into()
                    }
                    "OFF" => {
                        self.field.lattice = None;
                        "field hidden".into()
                    }
                    other => return Err(Error::InvalidArgument(format!("unknown FIELD subcommand `{other}`"))),
                }
            }
            "SET" => {
                let what = arg(rest, 0, "option")?.to_ascii_uppercase();
                let mut o = self.options;
                match what.as_str() {
                    "FILL" => o.fill = on_off(rest.get(1))?,
                    "EDGES" => o.edges = on_off(rest.get(1))?,
                    "CLASH" => o.clash_overlay = on_off(rest.get(1))?,
                    "AMBIENT" => o.ambient = num(arg(rest, 1, "ambient level")?)?,
                    other => return Err(Error::InvalidArgument(format!("unknown option `{other}`"))),
                }
                o.check()?;
                self.options = o;
                format!("{} set", what.to_lowercase())
            }
            "CLASH" => {
                let r = detect_clashes(&self.drawn())?;
                let mut s = format!("{} clashing pairs", r.pairs.len());
                for p in &r.pairs {
                    s.push_str(&format!("; {} x {}", p.a, p.b));
                }
                s
            }
            "RENDER" => {
                let l = self.render_frame()?;
                format!("frame {} prims {}", l.frame, l.prims.len())
            }
            "EXPORT" => {
                let fmt: Format = arg(rest, 0, "format")?.parse()?;
                let path = rest[1..].join(" ");
                if path.is_empty() {
                    return Err(Error::InvalidArgument("EXPORT needs a path".into()));
                }
                let l = self.render_frame()?;
                export::export(&l, fmt, Path::new(&path))?;
                format!("wrote {path}")
            }
            "BENCH" => {
                let kind: BenchKind = arg(rest, 0, "benchmark kind")?.parse()?;
                benchmark(kind)?.to_string()
            }
            "HELP" => {
                "verbs: LOAD RELOAD SELECT DEPLOY TREE_TOGGLE TREE BOX TRD TUBS PLACE DELETE BOOL VIEW GAUGE GO DRAG \
                 EVENT HIT_REMOVE FIELD SET CLASH RENDER EXPORT BENCH HELP"
                    .into()
            }
            _ => return Err(Error::UnknownCommand(toks[0].to_string())),
        };
        if !keeps_picture {
            self.cache = None;
        }
        Ok(text)
    }
}

//! A subset of the AGDD detector description: parsing into a clickable
//! volume tree, serialization, selection and instantiation of volumes.
//!
//! ```text
//! <AGDD>
//!   <section name="S">
//!     <box name="B" X_Y_Z="dx dy dz"/>
//!     <trd name="T" Xmp_Ymp_Z="x1 x2 y1 y2 dz"/>
//!     <tubs name="U" Rio_Z="rin rout dz" nphi="32"/>
//!     <composition name="C">
//!       <posXYZ volume="B" X_Y_Z="x y z" rot="rx ry rz"/>
//!     </composition>
//!     <boolean name="D" op="subtraction">
//!       <posXYZ volume="B"/>
//!       <posXYZ volume="T" X_Y_Z="0 0 10"/>
//!     </boolean>
//!   </section>
//! </AGDD>
//! ```
//!
//! Lengths are full lengths in millimetres (a box `X_Y_Z="2 2 2"` spans
//! `[-1, 1]³`); angles are degrees, applied about x, then y, then z of the
//! parent frame. Names are global to the document and must be unique.
//!
//! Each section lists the volumes that no `posXYZ` refers to; every
//! reference is expanded in place, so a volume used twice appears as two
//! nodes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use roxmltree::Node;
use serde::{Deserialize, Serialize};

use crate::csg::{boolean_named, BooleanOpKind};
use crate::error::{Error, Result};
use crate::geom::{RigidTransform, Vec3};
use crate::volume::{make_box, make_trd, make_tube, SuperVolume, Volume, DEFAULT_SIDES};
use crate::xml;

pub type NodeId = u32;

/// Upper bound on expanded tree size.
pub const MAX_NODES: usize = 1_000_000;

/// Name of the document node at the top of every tree.
pub const ROOT_NAME: &str = "AGDD";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// Full lengths.
    Box { x: f64, y: f64, z: f64 },
    /// Full widths at `-z` (`x1`, `y1`) and `+z` (`x2`, `y2`), full length `z`.
    Trd { x1: f64, x2: f64, y1: f64, y2: f64, z: f64 },
    /// Radii and full length.
    Tubs { rin: f64, rout: f64, z: f64, nphi: usize },
}

impl Shape {
    pub fn build(&self, name: &str) -> Result<Volume> {
        match *self {
            Shape::Box { x, y, z } => make_box(name, [x / 2.0, y / 2.0, z / 2.0]),
            Shape::Trd { x1, x2, y1, y2, z } => make_trd(name, x1 / 2.0, x2 / 2.0, y1 / 2.0, y2 / 2.0, z / 2.0),
            Shape::Tubs { rin, rout, z, nphi } => make_tube(name, rin, rout, z / 2.0, nphi),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Shape::Box { .. } => "box",
            Shape::Trd { .. } => "trd",
            Shape::Tubs { .. } => "tubs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeKind {
    Document,
    Section,
    Primitive(Shape),
    Composition,
    Boolean { op: BooleanOpKind },
}

/// Position of a node in its parent, as written in the document.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub translation: Vec3,
    /// Degrees about x, y, z.
    pub rotation_deg: Vec3,
}

impl Placement {
    pub fn transform(&self) -> RigidTransform {
        RigidTransform::from_translation_euler_deg(self.translation, self.rotation_deg)
    }

    pub fn is_identity(&self) -> bool {
        self.translation == Vec3::ZERO && self.rotation_deg == Vec3::ZERO
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub placement: Placement,
    pub local_transform: RigidTransform,
    pub children: Vec<TreeNode>,
    pub deployed: bool,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryTree {
    pub root: TreeNode,
    pub source_path: Option<PathBuf>,
    pub revision: u64,
}

impl TreeNode {
    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut TreeNode)) {
        f(self);
        for c in &mut self.children {
            c.visit_mut(f);
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Path segments of the children of one node: the name, with `[k]` added
/// for the k-th (k ≥ 1) repeat of a name among siblings.
fn child_segments(node: &TreeNode) -> Vec<String> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    node.children
        .iter()
        .map(|c| {
            let k = seen.entry(c.name.as_str()).or_insert(0);
            let s = if *k == 0 { c.name.clone() } else { format!("{}[{}]", c.name, k) };
            *k += 1;
            s
        })
        .collect()
}

impl GeometryTree {
    pub fn node(&self, id: NodeId) -> Option<&TreeNode> {
        let mut stack = vec![&self.root];
        while let Some(n) = stack.pop() {
            if n.id == id {
                return Some(n);
            }
            // Ids are assigned in pre-order: descend into the last child
            // whose id does not exceed the target.
            if let Some(c) = n.children.iter().rev().find(|c| c.id <= id) {
                stack.push(c);
            }
        }
        None
    }

    fn node_mut(&mut self, id: NodeId) -> Option<&mut TreeNode> {
        let mut cur = &mut self.root;
        loop {
            if cur.id == id {
                return Some(cur);
            }
            let k = cur.children.iter().rposition(|c| c.id <= id)?;
            cur = &mut cur.children[k];
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |_| n += 1);
        n
    }

    /// Every node with its path, in pre-order.
    pub fn paths(&self) -> Vec<(NodeId, String)> {
        fn walk(n: &TreeNode, path: String, out: &mut Vec<(NodeId, String)>) {
            out.push((n.id, path.clone()));
            for (c, seg) in n.children.iter().zip(child_segments(n)) {
                walk(c, format!("{path}/{seg}"), out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, self.root.name.clone(), &mut out);
        out
    }

    pub fn path_of(&self, id: NodeId) -> Option<String> {
        self.paths().into_iter().find(|p| p.0 == id).map(|p| p.1)
    }

    /// Resolves a `/`-separated path; the leading document name is optional.
    pub fn find_path(&self, path: &str) -> Option<NodeId> {
        let mut segs: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
        if segs.first() == Some(&self.root.name.as_str()) {
            segs.remove(0);
        }
        let mut cur = &self.root;
        for seg in segs {
            let k = child_segments(cur).iter().position(|s| s == seg)?;
            cur = &cur.children[k];
        }
        Some(cur.id)
    }

    /// Product of local transforms from the root down to `id`.
    pub fn world_transform(&self, id: NodeId) -> Option<RigidTransform> {
        let mut t = RigidTransform::IDENTITY;
        let mut cur = &self.root;
        loop {
            t = t.compose(&cur.local_transform);
            if cur.id == id {
                return Some(t);
            }
            cur = cur.children.iter().rev().find(|c| c.id <= id)?;
        }
    }

    /// Equality of the node trees, ignoring revision and source.
    pub fn same_content(&self, other: &GeometryTree) -> bool {
        self.root == other.root
    }

    pub fn selected_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| {
            if n.selected {
                out.push(n.id)
            }
        });
        out
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Clone, Debug)]
struct Pos {
    volume: String,
    placement: Placement,
}

#[derive(Clone, Debug)]
enum Body {
    Shape(Shape),
    Composition(Vec<Pos>),
    Boolean(BooleanOpKind, Vec<Pos>),
}

#[derive(Clone, Debug)]
struct Def {
    name: String,
    body: Body,
}

impl Def {
    fn refs(&self) -> &[Pos] {
        match &self.body {
            Body::Shape(_) => &[],
            Body::Composition(p) | Body::Boolean(_, p) => p,
        }
    }
}

pub fn parse_agdd(text: &str) -> Result<GeometryTree> {
    let doc = xml::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "AGDD" {
        return Err(Error::schema(root.tag_name().name(), "expected <AGDD> as the root element"));
    }
    xml::check_attrs(root, &[])?;
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    let mut defs: BTreeMap<String, Def> = BTreeMap::new();
    let mut section_names = HashSet::new();
    for s in xml::elements(root)? {
        if s.tag_name().name() != "section" {
            return Err(Error::schema(s.tag_name().name(), "only <section> may appear inside <AGDD>"));
        }
        xml::check_attrs(s, &["name"])?;
        let sname = xml::required(s, "name")?.to_string();
        if !section_names.insert(sname.clone()) {
            return Err(Error::schema("section", format!("duplicate section name `{sname}`")));
        }
        let mut members = Vec::new();
        for v in xml::elements(s)? {
            let def = parse_def(v)?;
            if defs.contains_key(&def.name) {
                return Err(Error::schema(v.tag_name().name(), format!("duplicate volume name `{}`", def.name)));
            }
            members.push(def.name.clone());
            defs.insert(def.name.clone(), def);
        }
        sections.push((sname, members));
    }

    let mut referenced = HashSet::new();
    for d in defs.values() {
        for p in d.refs() {
            if !defs.contains_key(&p.volume) {
                return Err(Error::DanglingReference { from: d.name.clone(), to: p.volume.clone() });
            }
            referenced.insert(p.volume.clone());
        }
    }
    check_acyclic(&defs)?;

    let mut b = Builder { defs: &defs, next_id: 0 };
    let mut root = b.node(ROOT_NAME, NodeKind::Document, Placement::default(), Vec::new())?;
    for (sname, members) in &sections {
        let mut sec = b.node(sname, NodeKind::Section, Placement::default(), Vec::new())?;
        for m in members.iter().filter(|m| !referenced.contains(*m)) {
            sec.children.push(b.expand(m, Placement::default())?);
        }
        root.children.push(sec);
    }
    Ok(GeometryTree { root, source_path: None, revision: 0 })
}

pub fn load_agdd(path: &Path) -> Result<GeometryTree> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut t = parse_agdd(&text)?;
    t.source_path = Some(path.to_path_buf());
    Ok(t)
}

fn parse_def(v: Node) -> Result<Def> {
    let tag = v.tag_name().name();
    let name = || -> Result<String> { Ok(xml::required(v, "name")?.to_string()) };
    let leaf = |v: Node| -> Result<()> {
        if xml::elements(v)?.is_empty() {
            Ok(())
        } else {
            Err(Error::schema(tag, "primitive volumes cannot have children"))
        }
    };
    let body = match tag {
        "box" => {
            xml::check_attrs(v, &["name", "X_Y_Z"])?;
            leaf(v)?;
            let [x, y, z] = xml::numbers::<3>(v, "X_Y_Z", xml::required(v, "X_Y_Z")?)?;
            Body::Shape(Shape::Box { x, y, z })
        }
        "trd" => {
            xml::check_attrs(v, &["name", "Xmp_Ymp_Z"])?;
            leaf(v)?;
            let [x1, x2, y1, y2, z] = xml::numbers::<5>(v, "Xmp_Ymp_Z", xml::required(v, "Xmp_Ymp_Z")?)?;
            Body::Shape(Shape::Trd { x1, x2, y1, y2, z })
        }
        "tubs" => {
            xml::check_attrs(v, &["name", "Rio_Z", "nphi"])?;
            leaf(v)?;
            let [rin, rout, z] = xml::numbers::<3>(v, "Rio_Z", xml::required(v, "Rio_Z")?)?;
            let nphi = match v.attribute("nphi") {
                None => DEFAULT_SIDES,
                Some(s) => s
                    .trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n >= 3)
                    .ok_or_else(|| Error::schema("tubs", format!("attribute `nphi`: `{s}` is not an integer >= 3")))?,
            };
            Body::Shape(Shape::Tubs { rin, rout, z, nphi })
        }
        "composition" => {
            xml::check_attrs(v, &["name"])?;
            Body::Composition(parse_positions(v)?)
        }
        "boolean" => {
            xml::check_attrs(v, &["name", "op"])?;
            let op = match xml::required(v, "op")? {
                "union" => BooleanOpKind::Addition,
                "subtraction" => BooleanOpKind::Subtraction,
                "intersection" => BooleanOpKind::Intersection,
                other => {
                    return Err(Error::schema(
                        "boolean",
                        format!("attribute `op`: `{other}` is not union, subtraction or intersection"),
                    ))
                }
            };
            let pos = parse_positions(v)?;
            if pos.len() < 2 {
                return Err(Error::schema("boolean", format!("`{}` needs at least two <posXYZ> operands", name()?)));
            }
            Body::Boolean(op, pos)
        }
        other => return Err(Error::schema(other, "unknown volume element")),
    };
    let name = name()?;
    if name.is_empty() || name.contains('/') {
        return Err(Error::schema(tag, format!("attribute `name`: `{name}` must be non-empty and contain no `/`")));
    }
    if let Body::Shape(shape) = &body {
        shape.build(&name)?;
    }
    Ok(Def { name, body })
}

fn parse_positions(v: Node) -> Result<Vec<Pos>> {
    let mut out = Vec::new();
    for p in xml::elements(v)? {
        if p.tag_name().name() != "posXYZ" {
            return Err(Error::schema(
                p.tag_name().name(),
                format!("only <posXYZ> may appear inside <{}>", v.tag_name().name()),
            ));
        }
        xml::check_attrs(p, &["volume", "X_Y_Z", "rot"])?;
        let translation = match p.attribute("X_Y_Z") {
            Some(s) => Vec3::from(xml::numbers::<3>(p, "X_Y_Z", s)?),
            None => Vec3::ZERO,
        };
        let rotation_deg = match p.attribute("rot") {
            Some(s) => Vec3::from(xml::numbers::<3>(p, "rot", s)?),
            None => Vec3::ZERO,
        };
        out.push(Pos { volume: xml::required(p, "volume")?.to_string(), placement: Placement { translation, rotation_deg } });
    }
    Ok(out)
}

fn check_acyclic(defs: &BTreeMap<String, Def>) -> Result<()> {
    // 0 unvisited, 1 on stack, 2 done.
    let mut state: HashMap<&str, u8> = HashMap::new();
    for start in defs.keys() {
        if state.get(start.as_str()).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
        state.insert(start, 1);
        while let Some(&mut (name, ref mut k)) = stack.last_mut() {
            let refs = defs[name].refs();
            if *k < refs.len() {
                let next = refs[*k].volume.as_str();
                *k += 1;
                match state.get(next).copied().unwrap_or(0) {
                    0 => {
                        state.insert(next, 1);
                        stack.push((next, 0));
                    }
                    1 => {
                        return Err(Error::schema(
                            "posXYZ",
                            format!("volume `{name}` refers back to `{next}`, forming a cycle"),
                        ))
                    }
                    _ => {}
                }
            } else {
                state.insert(name, 2);
                stack.pop();
            }
        }
    }
    Ok(())
}

struct Builder<'a> {
    defs: &'a BTreeMap<String, Def>,
    next_id: u32,
}

impl Builder<'_> {
    fn node(&mut self, name: &str, kind: NodeKind, placement: Placement, children: Vec<TreeNode>) -> Result<TreeNode> {
        if self.next_id as usize >= MAX_NODES {
            return Err(Error::schema("posXYZ", format!("expanded tree exceeds {MAX_NODES} nodes")));
        }
        let id = self.next_id;
        self.next_id += 1;
        Ok(TreeNode {
            id,
            name: name.to_string(),
            kind,
            placement,
            local_transform: placement.transform(),
            children,
            deployed: false,
            selected: false,
        })
    }

    fn expand(&mut self, name: &str, placement: Placement) -> Result<TreeNode> {
        let def = &self.defs[name];
        let (kind, refs) = match &def.body {
            Body::Shape(s) => (NodeKind::Primitive(*s), &[][..]),
            Body::Composition(p) => (NodeKind::Composition, &p[..]),
            Body::Boolean(op, p) => (NodeKind::Boolean { op: *op }, &p[..]),
        };
        let mut node = self.node(name, kind, placement, Vec::new())?;
        for p in refs {
            let c = self.expand(&p.volume, p.placement)?;
            node.children.push(c);
        }
        Ok(node)
    }
}

// ---------------------------------------------------------------- writing

fn num(x: f64) -> String {
    // `{}` prints the shortest text that parses back to the same value.
    let s = format!("{x}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn triple(v: Vec3) -> String {
    format!("{} {} {}", num(v.x), num(v.y), num(v.z))
}

/// Writes the tree back as an AGDD document. Each volume is defined once,
/// in the section where it is first used; parsing the output yields an
/// equal tree.
pub fn serialize_agdd(tree: &GeometryTree) -> String {
    let mut out = String::from("<AGDD>\n");
    let mut written: HashSet<&str> = HashSet::new();
    for sec in &tree.root.children {
        if sec.children.is_empty() {
            let _ = writeln!(out, "  <section name=\"{}\"/>", xml::escape(&sec.name));
            continue;
        }
        let _ = writeln!(out, "  <section name=\"{}\">", xml::escape(&sec.name));
        for top in &sec.children {
            write_defs(top, &mut written, &mut out);
        }
        out.push_str("  </section>\n");
    }
    out.push_str("</AGDD>\n");
    out
}

fn write_defs<'a>(n: &'a TreeNode, written: &mut HashSet<&'a str>, out: &mut String) {
    if written.contains(n.name.as_str()) {
        return;
    }
    for c in &n.children {
        write_defs(c, written, out);
    }
    written.insert(&n.name);
    let name = xml::escape(&n.name);
    match n.kind {
        NodeKind::Primitive(s) => {
            let attrs = match s {
                Shape::Box { x, y, z } => format!("X_Y_Z=\"{} {} {}\"", num(x), num(y), num(z)),
                Shape::Trd { x1, x2, y1, y2, z } => {
                    format!("Xmp_Ymp_Z=\"{} {} {} {} {}\"", num(x1), num(x2), num(y1), num(y2), num(z))
                }
                Shape::Tubs { rin, rout, z, nphi } => {
                    format!("Rio_Z=\"{} {} {}\" nphi=\"{nphi}\"", num(rin), num(rout), num(z))
                }
            };
            let _ = writeln!(out, "    <{} name=\"{name}\" {attrs}/>", s.tag());
        }
        NodeKind::Composition | NodeKind::Boolean { .. } => {
            let (tag, extra) = match n.kind {
                NodeKind::Boolean { op } => ("boolean", format!(" op=\"{}\"", op_word(op))),
                _ => ("composition", String::new()),
            };
            if n.children.is_empty() {
                let _ = writeln!(out, "    <{tag} name=\"{name}\"{extra}/>");
                return;
            }
            let _ = writeln!(out, "    <{tag} name=\"{name}\"{extra}>");
            for c in &n.children {
                let mut line = format!("      <posXYZ volume=\"{}\"", xml::escape(&c.name));
                if c.placement.translation != Vec3::ZERO {
                    let _ = write!(line, " X_Y_Z=\"{}\"", triple(c.placement.translation));
                }
                if c.placement.rotation_deg != Vec3::ZERO {
                    let _ = write!(line, " rot=\"{}\"", triple(c.placement.rotation_deg));
                }
                line.push_str("/>\n");
                out.push_str(&line);
            }
            let _ = writeln!(out, "    </{tag}>");
        }
        NodeKind::Document | NodeKind::Section => {}
    }
}

fn op_word(op: BooleanOpKind) -> &'static str {
    match op {
        BooleanOpKind::Addition => "union",
        BooleanOpKind::Subtraction => "subtraction",
        BooleanOpKind::Intersection => "intersection",
    }
}

// ---------------------------------------------------------------- flags

pub fn toggle_deploy(tree: &GeometryTree, id: NodeId) -> Result<GeometryTree> {
    let mut t = tree.clone();
    let n = t.node_mut(id).ok_or_else(|| Error::NotFound(format!("tree node {id}")))?;
    n.deployed = !n.deployed;
    Ok(t)
}

/// Flips the selection of a node and sets its whole subtree to the new
/// value.
pub fn toggle_select(tree: &GeometryTree, id: NodeId) -> Result<GeometryTree> {
    let mut t = tree.clone();
    let n = t.node_mut(id).ok_or_else(|| Error::NotFound(format!("tree node {id}")))?;
    let v = !n.selected;
    n.visit_mut(&mut |m| m.selected = v);
    Ok(t)
}

/// Re-reads the source file. Flags are carried over to nodes whose path
/// still exists. On failure nothing changes.
pub fn reload(tree: &GeometryTree) -> Result<GeometryTree> {
    let path = tree
        .source_path
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("tree was not loaded from a file".into()))?;
    let mut fresh = load_agdd(path)?;
    let flags: HashMap<String, (bool, bool)> = {
        let mut by_id: HashMap<NodeId, (bool, bool)> = HashMap::new();
        tree.root.visit(&mut |n| {
            by_id.insert(n.id, (n.deployed, n.selected));
        });
        tree.paths().into_iter().map(|(id, p)| (p, by_id[&id])).collect()
    };
    let paths: HashMap<NodeId, String> = fresh.paths().into_iter().collect();
    fresh.root.visit_mut(&mut |n| {
        if let Some(&(d, s)) = flags.get(&paths[&n.id]) {
            n.deployed = d;
            n.selected = s;
        }
    });
    fresh.revision = tree.revision + 1;
    Ok(fresh)
}

// ---------------------------------------------------------------- instancing

/// One SuperVolume per positioned primitive beneath each listed node, with
/// boolean nodes evaluated into a single SuperVolume. Nodes already covered
/// by an earlier id are not emitted twice.
pub fn instantiate(tree: &GeometryTree, ids: &[NodeId]) -> Result<Vec<SuperVolume>> {
    let paths: HashMap<NodeId, String> = tree.paths().into_iter().collect();
    let mut done: HashSet<NodeId> = HashSet::new();
    let mut out = Vec::new();
    for &id in ids {
        let node = tree.node(id).ok_or_else(|| Error::NotFound(format!("tree node {id}")))?;
        let world = tree.world_transform(id).expect("node exists");
        emit(node, &world, &paths, &mut done, &mut out)?;
    }
    Ok(out)
}

/// Instantiates the selected primitives and booleans.
pub fn instantiate_selected(tree: &GeometryTree) -> Result<Vec<SuperVolume>> {
    let mut ids = Vec::new();
    fn walk(n: &TreeNode, ids: &mut Vec<NodeId>) {
        match n.kind {
            NodeKind::Primitive(_) | NodeKind::Boolean { .. } => {
                if n.selected {
                    ids.push(n.id);
                }
            }
            _ => n.children.iter().for_each(|c| walk(c, ids)),
        }
    }
    walk(&tree.root, &mut ids);
    instantiate(tree, &ids)
}

fn emit(
    n: &TreeNode,
    world: &RigidTransform,
    paths: &HashMap<NodeId, String>,
    done: &mut HashSet<NodeId>,
    out: &mut Vec<SuperVolume>,
) -> Result<()> {
    let path = &paths[&n.id];
    match n.kind {
        NodeKind::Primitive(s) => {
            if done.insert(n.id) {
                let v = s.build(&n.name).map_err(|e| Error::InvalidGeometry(format!("{path}: {e}")))?;
                let mut sv = SuperVolume::single(v).with_transform(*world);
                sv.name = path.clone();
                out.push(sv);
            }
        }
        NodeKind::Boolean { .. } => {
            if done.insert(n.id) {
                let mut sv = evaluate_boolean(n, path).map_err(|e| match e {
                    Error::InvalidGeometry(m) if m.starts_with(path.as_str()) => Error::InvalidGeometry(m),
                    e => Error::InvalidGeometry(format!("{path}: {e}")),
                })?;
                sv.transform = *world;
                sv.name = path.clone();
                out.push(sv);
            }
        }
        _ => {
            for c in &n.children {
                emit(c, &world.compose(&c.local_transform), paths, done, out)?;
            }
        }
    }
    Ok(())
}

/// All primitives of a subtree as volumes in the frame of its parent.
fn solid(n: &TreeNode, path: &str) -> Result<Vec<Volume>> {
    let local = &n.local_transform;
    match n.kind {
        NodeKind::Primitive(s) => Ok(vec![s.build(&n.name)?.transformed(local)]),
        NodeKind::Boolean { .. } => {
            Ok(evaluate_boolean(n, path)?.volumes.into_iter().map(|v| v.transformed(local)).collect())
        }
        _ => {
            let mut out = Vec::new();
            for c in &n.children {
                out.extend(solid(c, path)?.into_iter().map(|v| v.transformed(local)));
            }
            Ok(out)
        }
    }
}

/// Folds the operands left to right; the result is in the node's own frame.
fn evaluate_boolean(n: &TreeNode, path: &str) -> Result<SuperVolume> {
    let NodeKind::Boolean { op } = n.kind else { unreachable!("boolean node expected") };
    let operand = |k: usize, c: &TreeNode| -> Result<SuperVolume> {
        let mut vols = solid(c, path)?;
        for (j, v) in vols.iter_mut().enumerate() {
            v.name = format!("{}_{k}_{j}", c.name);
        }
        let mut sv = SuperVolume::empty(format!("{}#{k}", c.name));
        sv.volumes = vols;
        Ok(sv)
    };
    let mut acc = operand(0, &n.children[0])?;
    for (k, c) in n.children.iter().enumerate().skip(1) {
        let b = operand(k, c)?;
        acc = boolean_named(&acc, &b, op, &n.name)
            .map_err(|e| Error::InvalidGeometry(format!("{path}: operand {k} `{}`: {e}", c.name)))?;
    }
    let k = acc.volumes.len();
    if k > 1 {
        for (j, v) in acc.volumes.iter_mut().enumerate() {
            v.name = format!("{}_{j}", n.name);
        }
    } else if let Some(v) = acc.volumes.first_mut() {
        v.name = n.name.clone();
    }
    Ok(acc)
}

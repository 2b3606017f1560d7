//! Mesh validation: closedness, topology, planarity and orientation.

use std::fmt;

use serde::Serialize;

use crate::geom::Tolerances;
use crate::mesh::{is_self_intersecting, planarity_deviation, IndexedMesh};
use crate::volume::Volume;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Issue {
    /// Directed edges without exactly one opposite partner.
    EdgePairing(usize),
    /// A connected shell whose Euler characteristic is odd or above 2.
    EulerCharacteristic(i64),
    /// Facet vertices further than `ε_plane` from the facet plane.
    Planarity { facet: usize, deviation: f64 },
    SelfIntersectingFacet(usize),
    DegenerateFacet(usize),
    NonPositiveVolume(f64),
    Empty,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::EdgePairing(n) => write!(f, "edge-pairing violation ({n} unmatched directed edges)"),
            Issue::EulerCharacteristic(x) => write!(f, "invalid Euler characteristic {x}"),
            Issue::Planarity { facet, deviation } => {
                write!(f, "planarity: facet {facet} deviates by {deviation:e}")
            }
            Issue::SelfIntersectingFacet(i) => write!(f, "facet {i} is self-intersecting"),
            Issue::DegenerateFacet(i) => write!(f, "facet {i} is degenerate"),
            Issue::NonPositiveVolume(v) => write!(f, "signed volume {v} is not positive"),
            Issue::Empty => write!(f, "volume has no facets"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub closed: bool,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// `V − E + F` over the whole volume.
    pub euler: i64,
    pub shells: usize,
    pub max_planarity_deviation: f64,
    pub signed_volume: f64,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks a volume against the invariants the renderer and booleans rely on.
///
/// Tolerances are relative to the volume's own bounding-box diagonal.
pub fn validate(v: &Volume) -> ValidationReport {
    validate_with(v, Tolerances::for_bounds(&v.bounds()))
}

pub fn validate_with(v: &Volume, tol: Tolerances) -> ValidationReport {
    let mut issues = Vec::new();
    if v.facets.is_empty() {
        issues.push(Issue::Empty);
    }
    let mut max_dev: f64 = 0.0;
    for (i, f) in v.facets.iter().enumerate() {
        if f.vertices.len() < 3 || f.area() <= tol.geom * tol.geom {
            issues.push(Issue::DegenerateFacet(i));
            continue;
        }
        let dev = planarity_deviation(&f.vertices);
        max_dev = max_dev.max(dev);
        if dev > tol.plane {
            issues.push(Issue::Planarity { facet: i, deviation: dev });
        }
        if f.vertices.len() <= 256 && is_self_intersecting(&f.vertices) {
            issues.push(Issue::SelfIntersectingFacet(i));
        }
    }

    let mesh = IndexedMesh::weld(v.facets.iter().map(|f| (&f.vertices[..], f.rgb)), tol.geom);
    let violations = mesh.edge_pairing_violations();
    if violations > 0 {
        issues.push(Issue::EdgePairing(violations));
    }
    let comps = mesh.components();
    for c in &comps {
        let chi = mesh.sub_mesh(c).euler_characteristic();
        if chi > 2 || chi % 2 != 0 {
            issues.push(Issue::EulerCharacteristic(chi));
        }
    }
    let vol = v.signed_volume();
    if !(vol > 0.0) {
        issues.push(Issue::NonPositiveVolume(vol));
    }
    ValidationReport {
        closed: violations == 0 && !mesh.faces.is_empty(),
        vertices: mesh.verts.len(),
        edges: mesh.undirected_edges().len(),
        faces: mesh.faces.len(),
        euler: mesh.euler_characteristic(),
        shells: comps.len(),
        max_planarity_deviation: max_dev,
        signed_volume: vol,
        issues,
    }
}

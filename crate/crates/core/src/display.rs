//! The 2D vector display list produced by the renderer and consumed by UIs
//! and exporters.
//!
//! Coordinates are film millimeters (see [`crate::camera`]). The JSON form is
//! the wire format: `{"frame":n,"prims":[{"t":"poly",...},...]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// Default color of clash loops.
pub const CLASH_RGB: Rgb = [1.0, 0.0, 0.0];
/// Color of fitted tracks.
pub const TRACK_RGB: Rgb = [0.0, 0.2, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerShape {
    Circle,
    Square,
    Cross,
    Dot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum Prim {
    /// Filled facet; `i` is the lighting intensity in `[0, 1]`.
    Poly { pts: Vec<[f64; 2]>, rgb: Rgb, i: f64 },
    Line { pts: Vec<[f64; 2]>, rgb: Rgb, w: f64 },
    Arrow { tail: [f64; 2], head: [f64; 2], rgb: Rgb },
    /// `r` is the marker radius in film millimeters.
    Marker { at: [f64; 2], shape: MarkerShape, r: f64, rgb: Rgb },
    Text { at: [f64; 2], s: String, rgb: Rgb },
}

impl Prim {
    fn coords(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            Prim::Poly { pts, rgb, i } => {
                Box::new(pts.iter().flatten().copied().chain(rgb.iter().copied()).chain([*i]))
            }
            Prim::Line { pts, rgb, w } => {
                Box::new(pts.iter().flatten().copied().chain(rgb.iter().copied()).chain([*w]))
            }
            Prim::Arrow { tail, head, rgb } => Box::new(tail.iter().chain(head).chain(rgb).copied()),
            Prim::Marker { at, r, rgb, .. } => Box::new(at.iter().chain(rgb).copied().chain([*r])),
            Prim::Text { at, rgb, .. } => Box::new(at.iter().chain(rgb).copied()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisplayList {
    pub frame: u64,
    pub prims: Vec<Prim>,
}

impl DisplayList {
    pub fn new(frame: u64) -> DisplayList {
        DisplayList { frame, prims: Vec::new() }
    }

    pub fn extend(&mut self, other: DisplayList) {
        self.prims.extend(other.prims);
    }

    /// Number of primitives of each kind: polys, lines, arrows, markers, texts.
    pub fn counts(&self) -> [usize; 5] {
        let mut c = [0; 5];
        for p in &self.prims {
            c[match p {
                Prim::Poly { .. } => 0,
                Prim::Line { .. } => 1,
                Prim::Arrow { .. } => 2,
                Prim::Marker { .. } => 3,
                Prim::Text { .. } => 4,
            }] += 1;
        }
        c
    }

    pub fn all_finite(&self) -> bool {
        self.prims.iter().all(|p| p.coords().all(f64::is_finite))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("display lists contain only finite numbers")
    }

    pub fn from_json(s: &str) -> Result<DisplayList> {
        serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line() as u32,
            column: e.column() as u32,
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let d = DisplayList {
            frame: 3,
            prims: vec![
                Prim::Poly { pts: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.5]], rgb: [1.0, 0.5, 0.25], i: 0.8 },
                Prim::Marker { at: [0.1, 0.2], shape: MarkerShape::Circle, r: 0.5, rgb: [0.0; 3] },
            ],
        };
        let s = d.to_json();
        assert!(s.starts_with(r#"{"frame":3,"prims":[{"t":"poly","pts":[[0.0,0.0]"#), "{s}");
        assert!(s.contains(r#"{"t":"marker","at":[0.1,0.2],"shape":"circle","r":0.5"#));
        assert_eq!(DisplayList::from_json(&s).unwrap().to_json(), s);
    }
}

//! SVG and Encapsulated PostScript output of display lists.
//!
//! Both writers are pure functions of the list, so equal lists give equal
//! bytes. The page shows the film frame; SVG uses film millimetres with y
//! pointing down, EPS uses 10 points per film millimetre.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::{FRAME_HALF_HEIGHT, FRAME_HALF_WIDTH};
use crate::display::{DisplayList, MarkerShape, Prim, Rgb};
use crate::error::{Error, Result};

/// EPS points per film millimetre.
pub const EPS_SCALE: f64 = 10.0;
/// Stroke width, in film millimetres, of a line with `w = 1`.
pub const STROKE_MM: f64 = 0.06;
/// Arrow head length as a fraction of the arrow, and its cap.
const HEAD_FRACTION: f64 = 0.25;
const HEAD_MAX_MM: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Svg,
    Eps,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(Format::Svg),
            "eps" | "ps" => Ok(Format::Eps),
            other => Err(Error::InvalidArgument(format!("unknown export format `{other}`"))),
        }
    }
}

pub fn render_to(list: &DisplayList, format: Format) -> String {
    match format {
        Format::Svg => to_svg(list),
        Format::Eps => to_eps(list),
    }
}

pub fn export(list: &DisplayList, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render_to(list, format)).map_err(|e| Error::io(path, e))
}

/// Six decimals, never `-0.000000`.
fn f6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').trim_matches(|c| c == '0' || c == '.').is_empty() {
        "0.000000".into()
    } else {
        s
    }
}

fn byte(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn shade(rgb: Rgb, i: f64) -> Rgb {
    rgb.map(|c| c * i)
}

fn css(rgb: Rgb) -> String {
    format!("rgb({},{},{})", byte(rgb[0]), byte(rgb[1]), byte(rgb[2]))
}

/// Shaft end and the two barbs of an arrow head.
fn arrow_head(tail: [f64; 2], head: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let d = [head[0] - tail[0], head[1] - tail[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return (head, head);
    }
    let h = (len * HEAD_FRACTION).min(HEAD_MAX_MM);
    let (ux, uy) = (d[0] / len, d[1] / len);
    let back = [head[0] - ux * h, head[1] - uy * h];
    let (px, py) = (-uy * h * 0.5, ux * h * 0.5);
    ([back[0] + px, back[1] + py], [back[0] - px, back[1] - py])
}

fn xml_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn to_svg(list: &DisplayList) -> String {
    let (w, h) = (2.0 * FRAME_HALF_WIDTH, 2.0 * FRAME_HALF_HEIGHT);
    let mut o = String::new();
    let _ = writeln!(
        o,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}mm\" height=\"{h}mm\" viewBox=\"{} {} {w} {h}\">",
        -FRAME_HALF_WIDTH, -FRAME_HALF_HEIGHT
    );
    // Film v points up, SVG y points down.
    let pt = |p: &[f64; 2]| format!("{},{}", f6(p[0]), f6(-p[1]));
    let pts = |ps: &[[f64; 2]]| ps.iter().map(pt).collect::<Vec<_>>().join(" ");
    for p in &list.prims {
        match p {
            Prim::Poly { pts: ps, rgb, i } => {
                let _ = writeln!(o, "<polygon points=\"{}\" fill=\"{}\"/>", pts(ps), css(shade(*rgb, *i)));
            }
            Prim::Line { pts: ps, rgb, w } => {
                let _ = writeln!(
                    o,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>",
                    pts(ps),
                    css(*rgb),
                    f6(w * STROKE_MM)
                );
            }
            Prim::Arrow { tail, head, rgb } => {
                let (b1, b2) = arrow_head(*tail, *head);
                let _ = writeln!(
                    o,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>",
                    pts(&[*tail, *head, b1, *head, b2]),
                    css(*rgb),
                    f6(STROKE_MM)
                );
            }
            Prim::Marker { at, shape, r, rgb } => {
                let c = css(*rgb);
                let (x, y) = (at[0], -at[1]);
                let _ = match shape {
                    MarkerShape::Circle => writeln!(
                        o,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"{}\"/>",
                        f6(x),
                        f6(y),
                        f6(*r),
                        f6(STROKE_MM)
                    ),
                    MarkerShape::Dot => {
                        writeln!(o, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{c}\"/>", f6(x), f6(y), f6(*r))
                    }
                    MarkerShape::Square => writeln!(
                        o,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"{}\"/>",
                        f6(x - r),
                        f6(y - r),
                        f6(2.0 * r),
                        f6(2.0 * r),
                        f6(STROKE_MM)
                    ),
                    MarkerShape::Cross => writeln!(
                        o,
                        "<path d=\"M{},{}L{},{}M{},{}L{},{}\" stroke=\"{c}\" stroke-width=\"{}\"/>",
                        f6(x - r),
                        f6(y - r),
                        f6(x + r),
                        f6(y + r),
                        f6(x - r),
                        f6(y + r),
                        f6(x + r),
                        f6(y - r),
                        f6(STROKE_MM)
                    ),
                };
            }
            Prim::Text { at, s, rgb } => {
                let _ = writeln!(
                    o,
                    "<text x=\"{}\" y=\"{}\" font-size=\"1\" fill=\"{}\">{}</text>",
                    f6(at[0]),
                    f6(-at[1]),
                    css(*rgb),
                    xml_text(s)
                );
            }
        }
    }
    o.push_str("</svg>\n");
    o
}

fn ps_string(s: &str) -> String {
    let mut o = String::from("(");
    for c in s.chars() {
        match c {
            '(' | ')' | '\\' => {
                o.push('\\');
                o.push(c);
            }
            c if c.is_ascii() && !c.is_ascii_control() => o.push(c),
            _ => o.push('?'),
        }
    }
    o.push(')');
    o
}

pub fn to_eps(list: &DisplayList) -> String {
    let (w, h) = (2.0 * FRAME_HALF_WIDTH * EPS_SCALE, 2.0 * FRAME_HALF_HEIGHT * EPS_SCALE);
    let mut o = String::new();
    o.push_str("%!PS-Adobe-3.0 EPSF-3.0\n");
    let _ = writeln!(o, "%%BoundingBox: 0 0 {} {}", w.ceil() as i64, h.ceil() as i64);
    let _ = writeln!(o, "%%HiResBoundingBox: 0 0 {} {}", f6(w), f6(h));
    o.push_str("%%Creator: detviz\n%%Pages: 1\n%%EndComments\n");
    let _ = writeln!(o, "gsave {} {} translate {EPS_SCALE} {EPS_SCALE} scale", f6(w / 2.0), f6(h / 2.0));
    o.push_str("1 setlinejoin 1 setlinecap\n");
    let col = |rgb: Rgb| {
        format!("{} {} {} setrgbcolor", f6(rgb[0].clamp(0.0, 1.0)), f6(rgb[1].clamp(0.0, 1.0)), f6(rgb[2].clamp(0.0, 1.0)))
    };
    let path = |ps: &[[f64; 2]]| {
        let mut s = String::from("newpath");
        for (k, p) in ps.iter().enumerate() {
            let _ = write!(s, " {} {} {}", f6(p[0]), f6(p[1]), if k == 0 { "moveto" } else { "lineto" });
        }
        s
    };
    for p in &list.prims {
        match p {
            Prim::Poly { pts, rgb, i } => {
                let _ = writeln!(o, "{} {} closepath fill", col(shade(*rgb, *i)), path(pts));
            }
            Prim::Line { pts, rgb, w } => {
                let _ = writeln!(o, "{} {} setlinewidth {} stroke", col(*rgb), f6(w * STROKE_MM), path(pts));
            }
            Prim::Arrow { tail, head, rgb } => {
                let (b1, b2) = arrow_head(*tail, *head);
                let _ = writeln!(
                    o,
                    "{} {} setlinewidth {} stroke {} closepath fill",
                    col(*rgb),
                    f6(STROKE_MM),
                    path(&[*tail, *head]),
                    path(&[*head, b1, b2])
                );
            }
            Prim::Marker { at, shape, r, rgb } => {
                let (x, y, r) = (at[0], at[1], *r);
                let body = match shape {
                    MarkerShape::Circle => format!("newpath {} {} {} 0 360 arc stroke", f6(x), f6(y), f6(r)),
                    MarkerShape::Dot => format!("newpath {} {} {} 0 360 arc fill", f6(x), f6(y), f6(r)),
                    MarkerShape::Square => format!("{} closepath stroke", path(&[[x - r, y - r], [x + r, y - r], [x + r, y + r], [x - r, y + r]])),
                    MarkerShape::Cross => format!(
                        "{} stroke {} stroke",
                        path(&[[x - r, y - r], [x + r, y + r]]),
                        path(&[[x - r, y + r], [x + r, y - r]])
                    ),
                };
                let _ = writeln!(o, "{} {} setlinewidth {body}", col(*rgb), f6(STROKE_MM));
            }
            Prim::Text { at, s, rgb } => {
                let _ = writeln!(
                    o,
                    "{} /Helvetica findfont 1 scalefont setfont {} {} moveto {} show",
                    col(*rgb),
                    f6(at[0]),
                    f6(at[1]),
                    ps_string(s)
                );
            }
        }
    }
    o.push_str("grestore\nshowpage\n%%EOF\n");
    o
}

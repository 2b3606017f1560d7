//! Small helpers over `roxmltree` shared by the AGDD and event readers.

use roxmltree::{Document, Node};

use crate::error::{Error, Result};

pub(crate) fn parse(text: &str) -> Result<Document<'_>> {
    Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::Parse { line: pos.row, column: pos.col, message: e.to_string() }
    })
}

/// Line and column of a node, for messages.
pub(crate) fn position(node: Node) -> (u32, u32) {
    let p = node.document().text_pos_at(node.range().start);
    (p.row, p.col)
}

/// Element children, rejecting stray text.
pub(crate) fn elements<'a, 'i>(node: Node<'a, 'i>) -> Result<Vec<Node<'a, 'i>>> {
    let mut out = Vec::new();
    for c in node.children() {
        if c.is_element() {
            out.push(c);
        } else if c.is_text() && !c.text().unwrap_or("").trim().is_empty() {
            let (line, column) = position(c);
            return Err(Error::schema(
                node.tag_name().name(),
                format!("unexpected text at line {line}, column {column}"),
            ));
        }
    }
    Ok(out)
}

/// Fails on attributes outside `allowed`.
pub(crate) fn check_attrs(node: Node, allowed: &[&str]) -> Result<()> {
    for a in node.attributes() {
        if !allowed.contains(&a.name()) {
            return Err(Error::schema(node.tag_name().name(), format!("unknown attribute `{}`", a.name())));
        }
    }
    Ok(())
}

pub(crate) fn required<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str> {
    node.attribute(name)
        .ok_or_else(|| Error::schema(node.tag_name().name(), format!("missing attribute `{name}`")))
}

/// Exactly `N` whitespace-separated numbers.
pub(crate) fn numbers<const N: usize>(node: Node, name: &str, text: &str) -> Result<[f64; N]> {
    let el = node.tag_name().name();
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != N {
        return Err(Error::schema(
            el,
            format!("attribute `{name}` needs {N} numbers, found {}", parts.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::schema(el, format!("attribute `{name}`: `{p}` is not a number")))?;
    }
    Ok(out)
}

pub(crate) fn number(node: Node, name: &str) -> Result<f64> {
    let [x] = numbers::<1>(node, name, required(node, name)?)?;
    Ok(x)
}

/// Escapes text for use inside a double-quoted attribute.
pub(crate) fn escape(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => o.push_str("&amp;"),
            '<' => o.push_str("&lt;"),
            '>' => o.push_str("&gt;"),
            '"' => o.push_str("&quot;"),
            c => o.push(c),
        }
    }
    o
}

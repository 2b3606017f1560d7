//! Server side of the wire protocol.
//!
//! Every frame is one line of UTF-8 text without newlines. Clients send
//! command lines (see [`detviz::session`]). The server answers each with
//! JSON frames:
//!
//! * `{"type":"reply","command":"BOX","text":"added a"}` on success,
//! * `{"type":"error","command":"FLY","kind":"unknown_command","message":"..."}` on failure,
//! * `{"type":"tree","revision":0,"root":{...}}` after tree changes and for `TREE`,
//! * `{"type":"stats","stats":{...}}` after event changes and for `EVENT STATS`,
//! * `{"frame":n,"prims":[...]}` whenever the picture may have changed.
//!
//! `RENDER` answers with a display frame only. The JSON schema of server
//! frames is [`SCHEMA`].

use detviz::error::Error;
use detviz::session::Session;
use serde_json::json;

/// JSON schema that every server frame satisfies.
pub const SCHEMA: &str = include_str!("../protocol.schema.json");

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidDimension(_) => "invalid_dimension",
        Error::InvalidGeometry(_) => "invalid_geometry",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::DegenerateView => "degenerate_view",
        Error::BehindCamera => "behind_camera",
        Error::ModeLocked => "mode_locked",
        Error::Parse { .. } => "parse",
        Error::Schema { .. } => "schema",
        Error::DanglingReference { .. } => "dangling_reference",
        Error::NotFound(_) => "not_found",
        Error::InsufficientData(_) => "insufficient_data",
        Error::DegenerateFit(_) => "degenerate_fit",
        Error::Io { .. } => "io",
        Error::UnknownCommand(_) => "unknown_command",
    }
}

pub fn error_frame(command: &str, e: &Error) -> String {
    json!({"type": "error", "command": command, "kind": error_kind(e), "message": e.to_string()}).to_string()
}

/// Display frame for the current session content.
pub fn display_frame(session: &mut Session) -> Result<String, Error> {
    Ok(session.render_frame()?.to_json())
}

/// Frames sent when a client connects: the tree and the first picture.
pub fn greeting(session: &mut Session) -> Vec<String> {
    let mut out = vec![session.tree_json()];
    match display_frame(session) {
        Ok(f) => out.push(f),
        Err(e) => out.push(error_frame("RENDER", &e)),
    }
    out
}

/// Runs one client frame against the session and returns the server frames
/// to send back, in order.
pub fn handle(session: &mut Session, frame: &str) -> Vec<String> {
    if frame.contains('\n') || frame.contains('\r') {
        let e = Error::InvalidArgument("frames must not contain newlines".into());
        return vec![error_frame("", &e)];
    }
    let toks: Vec<&str> = frame.split_whitespace().collect();
    let Some(first) = toks.first() else { return Vec::new() };
    let verb = first.to_ascii_uppercase();
    let sub = toks.get(1).map(|s| s.to_ascii_uppercase()).unwrap_or_default();
    if verb == "RENDER" {
        return vec![display_frame(session).unwrap_or_else(|e| error_frame(&verb, &e))];
    }
    let text = match session.apply(frame) {
        Ok(t) => t,
        Err(e) => return vec![error_frame(&verb, &e)],
    };
    let mut out = Vec::new();
    match (verb.as_str(), sub.as_str()) {
        ("TREE", _) => return vec![session.tree_json()],
        ("EVENT", "STATS") => return vec![session.stats_json()],
        _ => out.push(json!({"type": "reply", "command": verb, "text": text}).to_string()),
    }
    if matches!(verb.as_str(), "LOAD" | "RELOAD" | "SELECT" | "DEPLOY" | "TREE_TOGGLE") {
        out.push(session.tree_json());
    }
    if matches!(verb.as_str(), "EVENT" | "HIT_REMOVE") {
        out.push(session.stats_json());
    }
    let still = matches!(verb.as_str(), "GAUGE" | "HELP" | "BENCH" | "EXPORT" | "CLASH" | "DEPLOY" | "TREE_TOGGLE");
    if !still {
        out.push(display_frame(session).unwrap_or_else(|e| error_frame("RENDER", &e)));
    }
    out
}

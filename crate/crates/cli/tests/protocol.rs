use std::net::TcpStream;
use std::time::Instant;

use detviz::bench::{scene_view, synthetic_scene};
use detviz::session::Session;
use detviz_cli::protocol::SCHEMA;
use detviz_cli::server::Server;
use serde_json::Value;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

/// Every verb a client may send.
const VOCABULARY: &[&str] = &[
    "LOAD", "RELOAD", "SELECT", "DEPLOY", "TREE_TOGGLE", "TREE", "BOX", "TRD", "TUBS", "PLACE", "DELETE", "BOOL",
    "VIEW", "GAUGE", "GO", "DRAG", "EVENT", "HIT_REMOVE", "FIELD", "SET", "CLASH", "RENDER", "EXPORT", "BENCH", "HELP",
];

struct Client {
    ws: WebSocket<MaybeTlsStream<TcpStream>>,
    schema: jsonschema::Validator,
    last_frame: u64,
    frames_seen: usize,
}

impl Client {
    fn connect(session: Session) -> Client {
        let server = Server::bind("127.0.0.1:0", session).unwrap();
        let addr = server.spawn().unwrap();
        let (ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
        let schema = jsonschema::validator_for(&serde_json::from_str(SCHEMA).unwrap()).unwrap();
        Client { ws, schema, last_frame: 0, frames_seen: 0 }
    }

    fn send(&mut self, line: &str) {
        let verb = line.split_whitespace().next().unwrap().to_ascii_uppercase();
        assert!(VOCABULARY.contains(&verb.as_str()), "client sent `{verb}`");
        self.send_raw(line);
    }

    /// Sends a frame outside the vocabulary, to probe error handling.
    fn send_raw(&mut self, line: &str) {
        assert!(!line.contains('\n'));
        self.ws.send(Message::text(line)).unwrap();
    }

    /// Reads one server frame, checks it against the schema and the frame
    /// counter, and returns it.
    fn recv(&mut self) -> Value {
        let msg = self.ws.read().unwrap();
        let text = msg.to_text().unwrap().to_owned();
        assert!(!text.contains('\n'));
        let v: Value = serde_json::from_str(&text).unwrap();
        if let Err(e) = self.schema.validate(&v) {
            panic!("frame fails the schema: {e}\n{text}");
        }
        if let Some(n) = v.get("frame") {
            let n = n.as_u64().unwrap();
            assert!(n > self.last_frame, "frame {n} after {}", self.last_frame);
            self.last_frame = n;
            self.frames_seen += 1;
        }
        v
    }

    /// Sends a line and returns the kinds of the frames that answer it.
    fn exchange(&mut self, line: &str, replies: usize) -> Vec<Value> {
        self.send(line);
        (0..replies).map(|_| self.recv()).collect()
    }
}

fn kind(v: &Value) -> &str {
    match v.get("type") {
        Some(t) => t.as_str().unwrap(),
        None => "display",
    }
}

fn kinds(vs: &[Value]) -> Vec<&str> {
    vs.iter().map(kind).collect()
}

fn loaded_session() -> Session {
    let mut s = Session::new();
    s.apply(&format!("LOAD {FIXTURES}/detector.xml")).unwrap();
    s.apply("VIEW FIT").unwrap();
    s.apply(&format!("EVENT LOAD {FIXTURES}/outlier_event.xml")).unwrap();
    s
}

#[test]
fn conversation_follows_the_schema() {
    let mut c = Client::connect(loaded_session());
    let hello = [c.recv(), c.recv()];
    assert_eq!(kinds(&hello), ["tree", "display"]);
    assert_eq!(hello[0]["root"]["name"], "AGDD");

    // Gauge edits are held until GO.
    let r = c.exchange("GAUGE EYE 500 0 0", 1);
    assert_eq!(kinds(&r), ["reply"]);
    let r = c.exchange("GAUGE FOCAL 1.5", 1);
    assert_eq!(kinds(&r), ["reply"]);
    let r = c.exchange("GO", 2);
    assert_eq!(kinds(&r), ["reply", "display"]);
    assert_eq!(r[0]["text"], "moved");
    let r = c.exchange("GO 0 0 0 0 0 0 1", 2);
    assert_eq!(kinds(&r), ["reply", "display"]);

    let r = c.exchange("DRAG 0.05 -0.02", 2);
    assert_eq!(kinds(&r), ["reply", "display"]);

    let r = c.exchange("TREE_TOGGLE 1", 2);
    assert_eq!(kinds(&r), ["reply", "tree"]);
    assert_eq!(r[1]["root"]["children"][0]["deployed"], true);

    let before = c.last_frame;
    let r = c.exchange("SELECT AGDD/Magnet", 3);
    assert_eq!(kinds(&r), ["reply", "tree", "display"]);
    assert!(r[2]["prims"].as_array().unwrap().len() > 10);
    assert_eq!(r[2]["frame"].as_u64().unwrap(), before + 1);

    let r = c.exchange("EVENT FIT", 3);
    assert_eq!(kinds(&r), ["reply", "stats", "display"]);
    assert_eq!(r[1]["stats"]["n_hits_on_track"], 10);
    let r = c.exchange("HIT_REMOVE t3", 3);
    assert_eq!(kinds(&r), ["reply", "stats", "display"]);
    assert_eq!(r[1]["stats"]["n_hits"], 10);
    assert_eq!(r[1]["stats"]["n_hits_on_track"], 9);
    let r = c.exchange("EVENT RESTORE t3", 3);
    assert_eq!(r[1]["stats"]["n_hits_on_track"], 10);
    let r = c.exchange("EVENT STATS", 1);
    assert_eq!(kinds(&r), ["stats"]);

    let r = c.exchange("FIELD LATTICE -9000 -9000 0 9000 9000 0 7 7 1", 2);
    assert_eq!(kinds(&r), ["reply", "display"]);
    assert!(r[1]["prims"].as_array().unwrap().iter().any(|p| p["t"] == "arrow"));

    let r = c.exchange("RENDER", 1);
    assert_eq!(kinds(&r), ["display"]);

    c.send_raw("FLY 1 2 3");
    let r = [c.recv()];
    assert_eq!(kinds(&r), ["error"]);
    assert_eq!(r[0]["kind"], "unknown_command");
    let r = c.exchange("HIT_REMOVE nope", 1);
    assert_eq!(r[0]["kind"], "not_found");

    // The failed commands left the picture alone.
    let r = c.exchange("RENDER", 1);
    let again = c.exchange("RENDER", 1);
    assert_eq!(r[0]["prims"], again[0]["prims"]);
    assert!(c.frames_seen >= 10);
}

#[test]
fn projection_mode_refuses_drag() {
    let mut c = Client::connect(loaded_session());
    c.recv();
    c.recv();
    let r = c.exchange("VIEW PROJ z+", 2);
    assert_eq!(kinds(&r), ["reply", "display"]);
    let r = c.exchange("DRAG 0.1 0", 1);
    assert_eq!(r[0]["kind"], "mode_locked");
}

#[test]
fn drag_sustains_ten_frames_per_second() {
    let scene = synthetic_scene(400);
    let mut s = Session::new();
    s.view = scene_view(&scene);
    s.scene = scene;
    let mut c = Client::connect(s);
    c.recv();
    c.recv();
    const DRAGS: usize = 30;
    let t = Instant::now();
    for k in 0..DRAGS {
        let r = c.exchange(&format!("DRAG {} 0.003", 0.01 + 0.001 * k as f64), 2);
        assert_eq!(kinds(&r), ["reply", "display"]);
    }
    let fps = DRAGS as f64 / t.elapsed().as_secs_f64();
    eprintln!("loopback drag: {fps:.1} frames/s");
    assert!(fps >= 10.0, "{fps:.1} frames/s");
}

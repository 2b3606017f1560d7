use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use detviz::bench::{benchmark, BenchKind};
use detviz::export::{self, Format};
use detviz::session::Session;
use detviz_cli::server::{Server, DEFAULT_PORT};

/// Detector geometry and event viewer.
///
/// Without --headless, --export or --bench the session is served over a
/// WebSocket on the given port.
#[derive(Parser, Debug)]
#[command(name = "detviz", version)]
struct Args {
    /// AGDD geometry to load; every volume is selected and the view fitted.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Event XML to load and fit.
    #[arg(long)]
    event: Option<PathBuf>,
    #[arg(long, env = "DETVIZ_PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Read commands from stdin, one per line, and print the replies.
    #[arg(long)]
    headless: bool,
    /// Render once to this file (.svg or .eps) and exit.
    #[arg(long)]
    export: Option<PathBuf>,
    /// Run a benchmark (render_scene or evd_loop) and exit.
    #[arg(long)]
    bench: Option<BenchKind>,
}

fn start(args: &Args) -> detviz::error::Result<Session> {
    let mut s = Session::new();
    if let Some(g) = &args.geometry {
        s.apply(&format!("LOAD {}", g.display()))?;
        s.apply("SELECT AGDD")?;
        s.apply("VIEW FIT")?;
    }
    if let Some(e) = &args.event {
        s.apply(&format!("EVENT LOAD {}", e.display()))?;
        if let Err(err) = s.apply("EVENT FIT") {
            eprintln!("detviz: no track: {err}");
        }
        if args.geometry.is_none() {
            let b = s.event.as_ref().map(|e| e.bounds()).unwrap_or(detviz::geom::Aabb::EMPTY);
            s.view = detviz::camera::fit_view(&b);
        }
    }
    Ok(s)
}

fn headless(mut s: Session) -> io::Result<bool> {
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut ok = true;
    for line in stdin.lock().lines() {
        let line = line?;
        match s.apply(&line) {
            Ok(t) if t.is_empty() => {}
            Ok(t) => writeln!(out, "{t}")?,
            Err(e) => {
                ok = false;
                writeln!(out, "error: {e}")?
            }
        }
        out.flush()?;
    }
    Ok(ok)
}

fn run(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    if let Some(kind) = args.bench {
        println!("{}", benchmark(kind)?);
        return Ok(true);
    }
    let mut s = start(&args)?;
    if let Some(path) = &args.export {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("svg");
        let fmt: Format = ext.parse()?;
        let list = s.render_frame()?;
        export::export(&list, fmt, path)?;
        return Ok(true);
    }
    if args.headless {
        return Ok(headless(s)?);
    }
    let server = Server::bind(("127.0.0.1", args.port), s)?;
    eprintln!("detviz: listening on ws://{}", server.local_addr()?);
    server.run()?;
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("detviz: {e}");
            ExitCode::FAILURE
        }
    }
}

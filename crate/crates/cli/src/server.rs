//! WebSocket transport. Each connection gets its own copy of the start-up
//! session and is served on its own thread; frames are handled in arrival
//! order.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread;

use detviz::session::Session;
use tungstenite::{Message, WebSocket};

use crate::protocol;

pub const DEFAULT_PORT: u16 = 9470;

pub struct Server {
    listener: TcpListener,
    session: Session,
}

impl Server {
    pub fn bind(addr: impl std::net::ToSocketAddrs, session: Session) -> io::Result<Server> {
        Ok(Server { listener: TcpListener::bind(addr)?, session })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let session = self.session.clone();
            thread::spawn(move || {
                if let Err(e) = serve_connection(stream, session) {
                    eprintln!("connection closed: {e}");
                }
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || self.run());
        Ok(addr)
    }
}

fn send_all(ws: &mut WebSocket<TcpStream>, frames: Vec<String>) -> tungstenite::Result<()> {
    for f in frames {
        ws.write(Message::text(f))?;
    }
    ws.flush()
}

pub fn serve_connection(stream: TcpStream, mut session: Session) -> tungstenite::Result<()> {
    stream.set_nodelay(true).ok();
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    send_all(&mut ws, protocol::greeting(&mut session))?;
    loop {
        match ws.read() {
            Ok(Message::Text(t)) => send_all(&mut ws, protocol::handle(&mut session, t.as_str()))?,
            Ok(Message::Binary(_)) => {
                let e = detviz::error::Error::InvalidArgument("binary frames are not part of the protocol".into());
                send_all(&mut ws, vec![protocol::error_frame("", &e)])?;
            }
            Ok(Message::Close(_)) | Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Ok(_) => {}
            Err(e) => return Err(e),
        }
    }
}

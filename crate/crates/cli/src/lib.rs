//! Command line front end and session server for `detviz`.

pub mod protocol;
pub mod server;

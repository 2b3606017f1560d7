//! Every chapter of `book/` is compiled here so that `cargo test --doc`
//! runs its listings against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/booleans.md")]
pub mod booleans {}
#[doc = include_str!("../../../book/src/clash.md")]
pub mod clash {}
#[doc = include_str!("../../../book/src/camera.md")]
pub mod camera {}
#[doc = include_str!("../../../book/src/rendering.md")]
pub mod rendering {}
#[doc = include_str!("../../../book/src/agdd.md")]
pub mod agdd {}
#[doc = include_str!("../../../book/src/events.md")]
pub mod events {}
#[doc = include_str!("../../../book/src/fields.md")]
pub mod fields {}
#[doc = include_str!("../../../book/src/session.md")]
pub mod session {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

pub mod agdd;
pub mod bench;
pub mod camera;
pub mod clash;
pub mod csg;
pub mod display;
pub mod error;
pub mod event;
pub mod export;
pub mod field;
pub mod geom;
pub mod mesh;
pub mod render;
pub mod session;
pub mod validate;
pub mod volume;
mod xml;

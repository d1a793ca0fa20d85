//! Go rules, record formats, engine protocol, rendering and move extraction.

pub mod agent;
pub mod error;
pub mod go;
pub mod gtp;
pub mod render;
pub mod sgf;

pub use error::GoError;

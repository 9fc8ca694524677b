#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod optics;
pub mod qmath;
pub mod protocol;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

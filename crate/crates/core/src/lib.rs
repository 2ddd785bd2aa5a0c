//! Sky-catalog engine: HTM spatial indexing, region covers, a columnar
//! photo/spectro catalog with a journaled CSV loader, and the classic
//! data-mining queries over it.
pub mod bench;
pub mod catalog;
pub mod error;
pub mod htm;
pub mod loader;
pub mod queries;
pub mod region;
pub mod sphere;
pub mod synth;

pub use error::{Error, Result};

//! File formats, checkpoints, reports and the experiment pipeline around
//! `pixaug-core`.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod pipeline;
pub mod pixels;
pub mod report;
pub mod scenario;
pub mod scene;

pub use error::{Error, Result};

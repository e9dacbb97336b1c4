//! Numerical core for augmenting scarce labeled spectral-pixel data with a
//! small GAN, validating the synthetic pixels against the originals, and
//! measuring the effect on a single-hidden-layer classifier.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! pipeline and the command line live in the `pixaug` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod classifier;
pub mod data;
mod error;
pub mod gan;
pub(crate) mod math;
pub mod nn;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Number of spectral bands per pixel (B1 BLUE .. B6 SWIR2).
pub const BANDS: usize = 6;

/// Band column names in file order.
pub const BAND_NAMES: [&str; BANDS] = ["B1", "B2", "B3", "B4", "B5", "B6"];

//! Wireless interference identification pipeline.
//!
//! Synthesizes a 15-class Bluetooth/WiFi/Zigbee I/Q dataset, converts records
//! into time or frequency-domain feature matrices, applies training-cost
//! reductions (band selection, single-SNR training, PCA, row subsampling) and
//! trains convolutional classifiers with a small from-scratch engine.

mod binio;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod nn;
pub mod reduction;
pub mod seed;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex;

//! veintex — vein-texture biometric recognition toolkit.
//!
//! The crate covers the full pipeline: grayscale raster handling, five
//! local dense texture descriptors (LBP, LTP, LDP, LPQ, BSIF), histogram
//! feature vectors, multi-snapshot pairwise fusion, Euclidean verification
//! and closed-set identification, two evaluation protocols with
//! statistically summarized indicators, BSIF filter-bank learning via
//! whitening plus FastICA, and a deterministic synthetic dataset generator
//! for end-to-end experiments without licensed data.
//!
//! Determinism is a design contract: every random choice flows from an
//! explicit seed through the documented splitmix64 stream, and parallel
//! sections only ever reduce in input order, so identical seeds give
//! byte-identical artifacts at any thread count.

pub mod bsif_learn;
pub mod descriptors;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fusion;
pub mod linalg;
pub mod manifest;
pub mod matching;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

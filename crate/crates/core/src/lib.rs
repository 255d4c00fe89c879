//! Online sparse streaming feature selection.
//!
//! Feature columns arrive over time in blocks, with a fraction of their
//! entries missing. Each block is completed by a rank-L latent factor model
//! trained with per-entry SGD, scored by a particle swarm searching binary
//! subset space against a cross-validated k-NN fitness, and committed through
//! a three-way decision: high-scoring features are accepted outright,
//! low-scoring ones rejected, and borderline ones admitted only if a
//! Fisher-Z conditional-independence test says they add information beyond
//! the features already selected. A final pass prunes features made
//! redundant by later arrivals.
//!
//! The crate is `no_std` (with `alloc`); all randomness flows through the
//! seeded generator in [`rng`], so every pipeline run is reproducible from
//! its configuration alone. IO, file formats, and the experiment harness
//! live in the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod knn;
pub mod lfa;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod swarm;
pub mod synth;
pub mod threeway;

mod matrix;

pub use matrix::Matrix;

//! Realtime spatiotemporal topic modeling and curiosity-driven exploration.
//!
//! A [`model::TopicModel`] holds collapsed Gibbs statistics over a grid of
//! cells. [`explore`] walks a [`world::WordMap`] choosing moves by word or
//! topic perplexity, and [`eval`] scores the resulting labelings by mutual
//! information against a batch oracle or ground truth.

// Validation uses `!(x > lo)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod explore;
pub mod grid;
pub mod labeling;
pub mod model;
pub mod perplexity;
pub mod seed;
pub mod stream;
pub mod vocab;
pub mod world;

pub use error::{Error, Result};
pub use grid::{CellKey, GridBounds, NeighborhoodConfig};
pub use labeling::Labeling;
pub use model::{ModelParams, TopicModel};
pub use seed::RngSeed;
pub use vocab::Vocabulary;
pub use world::WordMap;

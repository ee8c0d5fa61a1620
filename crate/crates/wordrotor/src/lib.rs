//! Alignment-based semantic textual similarity.
//!
//! The central scorer is Word Rotator's Distance: an exact earth mover's
//! distance between two sentences viewed as bags of unit direction vectors,
//! where each word carries mass proportional to its vector norm and moving
//! mass between words costs their cosine distance. Around it this crate
//! provides:
//!
//! - [`transport`]: an exact transportation-problem solver returning both the
//!   optimal cost and the word-by-word alignment plan,
//! - [`geometry`]: norm/direction decomposition and the word-level metrics,
//! - [`embeddings`]: text-format embedding, unigram-frequency, and stopword
//!   file I/O,
//! - [`converter`]: the word-vector converter pipeline (all-but-the-top,
//!   conceptor negation, dimension-wise normalization, SIF weighting,
//!   sentence-level common component removal),
//! - [`similarity`]: WRD, WMD, SIF-weighted WMD, and additive-composition
//!   baselines,
//! - [`evaluation`]: STS / word-similarity dataset parsing and Pearson /
//!   Spearman reporting.

pub mod converter;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod geometry;
mod linalg;
pub mod similarity;
pub mod transport;

pub use error::{Error, Result};

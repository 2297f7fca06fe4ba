//! Lattice-free MMI scoring for end-to-end speech recognition.
//!
//! The crate compiles numerator and denominator graphs from a phone lexicon,
//! runs log-semiring forward-backward over externally supplied emission
//! matrices, and uses the resulting prefix series to score partial
//! hypotheses during label-synchronous and frame-synchronous beam search.

pub mod alignment_score;
pub mod decoders;
pub mod error;
pub mod forward;
pub mod graphs;
pub mod prefix_score;
pub mod semiring;

pub use error::{Error, Result};

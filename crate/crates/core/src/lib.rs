//! Reformulation-category selection for robust conversational QA.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod kg;
pub mod pipeline;
pub mod qa;
pub mod rcs;
pub mod reformulator;
pub mod synth;
pub mod taxonomy;
pub mod text;

pub use error::{Error, Result};

/// The one RNG used everywhere, so seeded runs are reproducible.
pub type SeededRng = rand_chacha::ChaCha8Rng;

//! Modular rule learning: dimensionality reduction and clustering select the
//! inputs, interpretable rule learners (FOIL, IREP, RIPPER) produce the model.

pub mod bits;
pub mod cluster;
pub mod data;
pub mod learners;
pub mod pipeline;
pub mod represent;
pub mod rules;
pub mod seed;

pub use bits::Bits;

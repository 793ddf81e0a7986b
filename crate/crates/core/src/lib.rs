//! Finite flat spaces: exact distances in Euclidean quotients and
//! Wasserstein spaces, the lifting tower that embeds finite subsets of
//! compact bi-invariant groups into Euclidean permutation quotients with
//! distortion tending to 1, and an exact Markov type 2 verifier.

pub mod error;
pub mod groups;
pub mod markov;
pub mod metric;
pub mod numeric;
pub mod quotient;
pub mod tower;
pub mod transport;

pub use error::{Error, Result};

//! Critical points of the squared Euclidean distance to real algebraic
//! varieties, Kruskal-type rank certificates, exact symmetric
//! decompositions, finite-field rank searches, and best low-rank
//! approximation of (symmetric) tensors.

pub mod approx;
pub mod cli;
pub mod cp;
pub mod error;
pub mod gf;
pub mod kruskal;
pub mod linalg;
pub mod rng;
pub mod symdecomp;
pub mod tensor;
pub mod variety;

pub use error::{Error, Result};

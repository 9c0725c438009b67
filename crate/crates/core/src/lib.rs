//! Numerical irreducible decomposition by intersecting witness sets one
//! equation at a time with diagonal homotopies.

pub mod diagonal;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod parse;
pub mod policy;
pub mod poly;
pub mod registry;
pub mod report;
pub mod solver;
pub mod tracker;
pub mod univariate;
pub mod witness;
pub mod workers;

pub use error::{Error, Result};

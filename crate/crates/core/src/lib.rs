//! Finite-dimensional laboratory for regular unitary dilations of commuting
//! contraction semigroups.

pub mod analysis;
pub mod approximants;
pub mod calculus;
pub mod counterexample;
pub mod dissipativity;
pub mod error;
pub mod linalg;
pub mod monoid;
pub mod parallel;
pub mod random;
pub mod semigroup;
pub mod stochastic;
pub mod subset;
pub mod tolerances;

#[cfg(test)]
pub(crate) use random as testutil;

pub use error::{Error, Result};

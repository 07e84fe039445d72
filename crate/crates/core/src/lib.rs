//! Linking numbers of disjoint closed oriented submanifolds `K^k, L^ℓ ⊂ S^n`
//! (`k + ℓ = n − 1`) by numerical integration of the invariant linking
//! integral, its antipodal corollary and the degree of the join map.

pub mod catalog;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod kernel;
pub mod linkspec;
pub mod oracle;
pub mod quadrature;
pub mod signs;
pub mod sphere;

pub use error::{Error, Result};

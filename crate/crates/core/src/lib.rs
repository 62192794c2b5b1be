//! Simple tabulation hashing and the two-choice balls-into-bins process,
//! with the structural machinery used to reason about its maximum load:
//! hash graphs, load graphs, arboricity bounds, binomial-tree witnesses,
//! double cycles and dependent-key certificates.

pub mod adversary;
pub mod allocator;
pub mod dependency;
pub mod error;
pub mod harness;
pub mod hashgraph;
pub mod seed;
pub mod tabulation;

pub use error::{Error, Result};

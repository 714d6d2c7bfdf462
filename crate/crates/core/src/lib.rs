//! Familial DNA database search.
//!
//! Kinship likelihood ratios between a target STR profile and every member
//! of a database, posterior probabilities that a member is the target's
//! relative, candidate subsets with controlled efficiency, and a simulation
//! harness for checking all of it.

pub mod error;
pub mod genetics;
pub mod inference;
pub mod io;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod strategies;

pub use error::{Error, Result};

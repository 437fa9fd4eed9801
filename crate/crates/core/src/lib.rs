//! Relaxation of small open quantum systems: a four-state quantum dot between two
//! fermionic reservoirs and a two-site fermionic chain, with tools to detect and
//! map anomalous (Mpemba-type) crossings of relaxing observables.

pub mod error;
pub mod linalg;
pub mod observables;
pub mod qdot;
pub mod roots;
pub mod scan;
pub mod twosite;

pub use error::{Error, Result};

//! Resonances of open quantum graphs with Kirchhoff vertex conditions.
//!
//! The core works without `std` (it needs `alloc`); the `std` feature is on
//! by default and `parallel` adds rayon-backed loops over ensemble members.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod contour;
pub mod ensembles;
pub mod error;
pub mod graph;
pub mod linalg;
mod par;
pub mod secular;
pub mod solver;
pub mod statistics;

pub use error::{EnsembleError, GraphError, SolveError};
pub use graph::{BondTable, Edge, Limits, QuantumGraph, ValidationReport};
pub use linalg::C64;
pub use secular::{SecularSystem, SecularValue};

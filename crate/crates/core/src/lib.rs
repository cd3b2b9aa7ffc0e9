//! Finite-volume spectral localizer for 1-D chiral and 2-D Chern lattice models.

pub mod bec;
pub mod bounds;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod inertia;
pub mod invariants;
pub mod lattice;
pub mod linalg;
pub mod localizer;
pub mod operators;

pub use error::{Error, Result};

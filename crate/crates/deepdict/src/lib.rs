//! Deep dictionary learning toolkit.
//!
//! A deep sparse model generates observations by pushing an exactly
//! sparse code through a cascade of dictionaries, all but the last of
//! which have sparse columns, so every intermediate representation is
//! sparse too. This crate samples such models, recovers the dictionary
//! cascade by sequential alternating minimization (in forward order over
//! products, or backward peeling one dictionary at a time), and measures
//! the random-matrix properties (restricted isometries, singular-value
//! concentration, sample-count expressions) that the recovery theory
//! leans on.
//!
//! Start from the `examples/` directory: each major capability has a
//! runnable example. The `deepdict` binary drives the same library from
//! flat config files for scripted experiments.

pub mod altmin;
pub mod analysis;
pub mod deepfact;
pub mod error;
pub mod experiments;
pub mod genmodel;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{Matrix, SupportSet};

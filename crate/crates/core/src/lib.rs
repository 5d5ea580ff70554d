//! Forward and inverse toolkit for the isotropic Lamé system with piecewise
//! constant moduli on layered domains.
//!
//! The crate assembles P1 stiffness matrices, builds the local
//! Dirichlet-to-Neumann matrix on a boundary patch, reconstructs the moduli
//! from DtN data by projected Levenberg–Marquardt, and runs empirical probes of the
//! Lipschitz stability constant and related estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod error;
pub mod exec;
pub mod forward;
pub mod geometry;
pub mod identity;
pub mod inverse;
pub mod material;
pub mod probes;
pub mod report;

pub use error::{Error, Result};
pub use exec::Exec;

//! Bound states of the (1+1)-dimensional Dirac equation with
//! position-dependent mass and Fermi velocity.
//!
//! The pipeline maps the decoupled spinor equation onto a Schrödinger-like
//! problem in the canonical coordinate `q = ∫ dx / v_F`, solves it by finite
//! differences, and rebuilds the two-component spinor.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod eigensolver;
pub mod error;
pub mod grid;
pub mod pipeline;
pub mod potential;
pub mod profiles;
pub mod quadrature;
pub mod spinor;
pub mod transform;
pub mod tridiag;

pub use error::{Error, Result};

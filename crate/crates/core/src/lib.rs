//! Numerical laboratory for regular Dirichlet subspaces.
//!
//! The one-dimensional subspaces of Brownian motion are indexed by scale functions with
//! `s' ∈ {0, 1}` a.e.; [`scale`] builds them, [`forms1d`] evaluates their energies and
//! [`simulate`] samples the associated time-changed diffusions. [`levy`] covers symmetric
//! Lévy forms, [`discrete`] the finite-state form algebra and [`coupling`] product forms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod discrete;
pub mod error;
pub mod forms1d;
pub mod levy;
pub mod quadrature;
pub mod scale;
pub mod simulate;

pub use error::{Error, Result};

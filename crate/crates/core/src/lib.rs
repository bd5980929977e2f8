//! First-event ("time of arrival") statistics for quantum particles watched
//! by a detector that couples through a positive operator `Lambda`.
//!
//! Before the event the state evolves under `exp(-i H0 t - Lambda t / 2)`;
//! the event density is `p(t) = <psi_t, Lambda psi_t>` and the detection
//! probability up to `t` is `1 - ||psi_t||^2`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrival;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod events;
pub mod inversion;
pub mod lattice;
pub mod output;
pub mod quadrature;
pub mod runs;
pub mod specfun;
pub mod studies;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Transport through a Majorana box qubit coupled to two quantum dots and two
//! fermionic reservoirs, described by a Lindblad master equation.

// `!(x <= tol)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod model;
pub mod numerics;
pub mod observables;
pub mod table;

pub use error::{Error, Result};

//! Self-similar profiles of u_t = Δu^m + |x|^σ u^p.
//!
//! The crate integrates the profile equation from the origin, classifies each
//! shot as sign-changing, growing up or reaching an interface, bisects for the
//! interface profile, and checks the local behaviours and structural
//! properties the profiles are known to satisfy.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with x ≤ 0.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eigen;
pub mod fit;
pub mod integrator;
pub mod params;
pub mod phase;
pub mod profile;
pub mod shooting;

pub use params::{DerivedConstants, Mode, ParamError, ParamSet, Problem};

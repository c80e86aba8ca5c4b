//! Detection of objective Eulerian coherent structures in planar flows.
//!
//! Everything here works from a single velocity snapshot and its rate-of-strain
//! tensor: singularities of the strain field, tensorlines, elliptic limit
//! cycles, hyperbolic cores, and parabolic chains. The [`lagrangian`] module
//! advects particles to check the predicted material behaviour.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]
// NaN must fail threshold checks, so `!(x > t)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod elliptic;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hyperbolic;
pub mod kinematics;
pub mod lagrangian;
pub mod math;
pub mod parabolic;
pub mod singularity;
pub mod tensorline;
mod zeros;

pub use error::{Error, Result};
pub use field::{AnalyticField, AnalyticFlow, GridAxis, GriddedField, Rect, ScanGrid, VelocityField};
pub use math::{Jacobian2, Mat2, Sym2, Vec2};

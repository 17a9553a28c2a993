//! Gaussian tail bounds, hazard-function properties and numerical
//! verification of the correlation inequality `μ(K ∩ L) >= μ(K) μ(L)` for
//! convex bodies `K` and layers `L` whose Gaussian centroids lie on a
//! common hyperplane.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exec;
pub mod extreal;
pub mod extremal;
pub mod gauss;
pub mod geometry;
pub mod line;
pub mod mc;
pub mod profiles;
pub mod props;
pub mod quadrature;
pub mod reduction;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;

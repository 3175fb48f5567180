//! Geometry of stable and robust convex signal recovery.
//!
//! The crate measures how far the descent cone of a recovery program sits from
//! the kernel of a measurement map, and checks the inequalities that tie that
//! angle to restricted singular values, condition numbers, recovery error
//! bounds, classical compressed-sensing criteria and Gaussian widths.
//!
//! Modules follow the layers of the computation:
//!
//! * [`numkernel`]: dense factorizations, kernel projections, seeded Gaussian sampling.
//! * [`cones`]: cone variants with membership, projection, support and θ-expansion.
//! * [`rsv`]: restricted singular values, separation angles and condition numbers.
//! * [`solvers`]: ℓ1 and ℓ2 recovery programs with optimality certificates.
//! * [`criteria`]: RIP, NSP, RNSP and their translations into angles.
//! * [`gauss`]: Monte Carlo Gaussian widths and statistical dimensions.
//! * [`harness`]: experiment configs, end-to-end experiments and reports.

// NaN-rejecting guards such as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cones;
pub mod criteria;
mod error;
pub mod gauss;
pub mod harness;
mod lp;
pub mod numkernel;
pub mod report;
pub mod rsv;
pub mod solvers;

pub use error::{Error, Result};

/// Library version recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Computable Malliavin–Stein machinery on the Poisson space.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. Monte Carlo
//! loops are expressed against the [`exec::Executor`] trait so that a std
//! companion can run replicates in parallel while keeping results
//! bit-identical to the sequential executor shipped here.
//!
//! Module map:
//!
//! * [`space`]: control measures on boxes, Poisson configurations, windows.
//! * [`kernel`]: symmetric kernels on finite cell spaces and their contractions.
//! * [`chaos`]: multiple integrals, U-statistics, projections, `D` and `DL⁻¹`.
//! * [`stein`]: Chen–Stein and Gaussian Stein solvers, constants, discrete Taylor.
//! * [`bounds`]: Monte Carlo estimators of the six bound coefficients and friends.
//! * [`distances`]: total variation, Wasserstein-1 and a mixed-metric surrogate.
//! * [`geomgraph`]: disk graphs, induced subgraph counts and the mixed regime.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the formulas they implement.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod chaos;
pub mod distances;
mod error;
pub mod exec;
pub mod geomgraph;
pub mod kernel;
pub mod math;
pub mod rng;
pub mod space;
pub mod stats;
pub mod stein;

pub use error::{Error, Result};

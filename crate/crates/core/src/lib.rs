//! Gradient-based samplers and optimizers on locally nonconvex objectives.
//!
//! The crate contains the unadjusted and Metropolis-adjusted Langevin
//! samplers, gradient descent and EM, the packed-well hard instance and the
//! Gaussian-mixture posterior, closed-form complexity bounds, dataset
//! generators, low-dimensional correctness oracles, and the benchmark harness
//! that compares query counts of sampling and optimization as the dimension
//! grows.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix it to `f64`, which is what the harness and
//! the bound calculators use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod gmm_data;
pub mod harness;
pub mod numerics;
pub mod objectives;
pub mod optimizers;
pub mod samplers;

pub use error::{Error, Result};
pub use numerics::{RngStream, Scalar};

/// Double-precision vector.
pub type Vector = numerics::Vector<f64>;
/// Single-precision vector.
pub type VectorF32 = numerics::Vector<f32>;
/// Double-precision packed-well hard instance.
pub type PackedWell = objectives::PackedWellObjective<f64>;
/// Single-precision packed-well hard instance.
pub type PackedWellF32 = objectives::PackedWellObjective<f32>;
/// Double-precision Gaussian-mixture posterior.
pub type Gmm = objectives::GmmPosterior<f64>;
/// Single-precision Gaussian-mixture posterior.
pub type GmmF32 = objectives::GmmPosterior<f32>;
/// Double-precision quadratic baseline.
pub type Quadratic = objectives::QuadraticObjective<f64>;
/// Double-precision chain state.
pub type ChainState = samplers::ChainState<f64>;

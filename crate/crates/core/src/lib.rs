//! Capacity-region computations for the two-receiver vector Gaussian
//! broadcast channel: closed-form Gaussian rate functionals, covariance-
//! constrained maximization of the weighted objectives, boundary tracing for
//! the private- and common-message regions, and a scalar grid-distribution
//! laboratory for the structural identity checks.
//!
//! All numerical code is generic over the scalar type through [`scalar::Real`];
//! the aliases at the crate root fix `f64`, which is what the CLI and the
//! acceptance suites use.

// Rejecting comparisons are written as `!(x > bound)` on purpose: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

pub mod error;
pub mod lab;
pub mod linalg;
pub mod mat;
pub mod opt;
pub mod rates;
pub mod region;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};

/// Dense `f64` matrix.
pub type Matrix = mat::Mat<f64>;
/// Symmetric `f64` matrix.
pub type SymMatrix = linalg::SymMat<f64>;
/// Positive-semidefinite `f64` matrix.
pub type PsdMatrix = linalg::PsdMat<f64>;
/// Eigendecomposition of a symmetric `f64` matrix.
pub type Eigen = linalg::EigenDecomposition<f64>;
/// Two-receiver channel gains over `f64`.
pub type ChannelPair = rates::ChannelPair<f64>;
/// Common-message weight vector over `f64`.
pub type LambdaWeights = rates::LambdaWeights<f64>;
/// Layered signaling covariances over `f64`.
pub type GaussianSplit = rates::GaussianSplit<f64>;
/// Optimizer configuration over `f64`.
pub type OptConfig = opt::OptConfig<f64>;
/// Single-covariance optimizer outcome over `f64`.
pub type OptResult = opt::OptResult<f64>;
/// Traced boundary point over `f64`.
pub type RatePoint = region::RatePoint<f64>;
/// Trace configuration over `f64`.
pub type TraceConfig = region::TraceConfig<f64>;
/// Discretized scalar law over `f64`.
pub type GridDistribution = lab::GridDistribution<f64>;
/// Laboratory lattice description over `f64`.
pub type GridSpec = lab::GridSpec<f64>;

//! Transfer-operator analysis of a one-dimensional solid-on-solid interface
//! pinned by the Gaussian field `exp(-(s² + s̄²)/2N)`.
//!
//! Numerical routines are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod chain_sampler;
pub mod error;
pub mod export;
pub mod increments;
pub mod oracle;
pub mod real;
pub mod scaling_analysis;
pub mod selfcheck;
pub mod transfer_operator;

pub use chain_sampler::{DoobChain, InterfacePath, RescaledTrajectory, RngStream};
pub use error::{Error, Result};
pub use increments::{IncrementDistribution, IncrementKind};
pub use oracle::{ContinuumLimit, TinyInstance};
pub use real::Real;
pub use scaling_analysis::{ScalingReport, StudyConfig};
pub use transfer_operator::{EigenOptions, Eigenpair, TruncatedKernel, Window};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type IncrementsF64 = IncrementDistribution<f64>;
pub type IncrementsF32 = IncrementDistribution<f32>;
pub type KernelF64 = TruncatedKernel<f64>;
pub type KernelF32 = TruncatedKernel<f32>;
pub type EigenpairF64 = Eigenpair<f64>;
pub type EigenpairF32 = Eigenpair<f32>;

//! Simulation and exact MCMC inference for a Cox process whose intensity is
//! piecewise defined on a random Voronoi tessellation, with an independent
//! Gaussian process driving each cell.
//!
//! The numerical kernels (`geometry`, `linalg`, `gp`) are generic over the
//! floating-point type; the model and the sampler run in `f64` and use the
//! aliases below.

pub mod covariates;
pub mod error;
pub mod geometry;
pub mod gp;
pub mod linalg;
pub mod mcmc;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod summaries;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Location = geometry::Location<f64>;
pub type SpatialDomain = geometry::SpatialDomain<f64>;
pub type Partition = geometry::Partition<f64>;
pub type GpHyper = gp::GpHyper<f64>;
pub type GpRegionState = gp::GpRegionState<f64>;

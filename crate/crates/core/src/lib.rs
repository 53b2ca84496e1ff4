//! Cooperative vehicle localization (2D position + heading) from pairwise
//! angle-of-arrival measurements.
//!
//! The crate implements posterior-linearization belief propagation: each
//! communication link carries a two-sided bearing measurement, the nonlinear
//! bearing model is fitted by sigma-point statistical linear regression
//! against the current joint belief of the two vehicles, and Gaussian belief
//! propagation runs on the linearized factor graph. Re-linearizing against
//! the refreshed beliefs and repeating drives the estimates toward the true
//! posterior.
//!
//! Module map:
//! - [`geometry`]: vehicle states, angle arithmetic, the bearing model,
//!   field-of-view visibility, and noisy measurement simulation.
//! - [`gaussian`]: Gaussian densities, unscented sigma points, and the
//!   Kalman measurement update.
//! - [`slr`]: statistical linear regression with the angle-discontinuity
//!   correction.
//! - [`bp`]: Gaussian message passing on the vehicle factor graph.
//! - [`plbp`]: the outer linearize-then-propagate loop.
//! - [`scenario`]: synthetic scenario generation and file I/O.
//! - [`metrics`]: position/heading RMSE and error CDFs.
//! - [`oracle`]: brute-force posterior references for small instances.
//!
//! All estimation math is generic over the scalar type through [`Real`];
//! the simulation layer and the type aliases below pin `f64`.

pub mod bp;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod plbp;
pub mod real;
pub mod scenario;
pub mod slr;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instantiations of the generic core types.
pub type VehicleState = geometry::VehicleState<f64>;
pub type AoAPair = geometry::AoAPair<f64>;
pub type Gaussian = gaussian::Gaussian<f64>;
pub type SigmaSet = gaussian::SigmaSet<f64>;
pub type LinearModel = slr::LinearModel<f64>;
pub type Message = bp::Message<f64>;
pub type FactorGraph = bp::FactorGraph<f64>;
pub type RunResult = plbp::RunResult<f64>;

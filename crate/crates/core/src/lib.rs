//! Neural WENO3 face reconstruction with rational activations.
//!
//! The crate covers the whole offline pipeline:
//!
//! * [`funcspace`]: exact cell-average / face-value pairs from analytical
//!   function families, used as training and validation data.
//! * [`reconstruct`]: classical reconstructions (WENO3-JS, WENO3-Z,
//!   WENO5-JS, QUICK) and the shared sub-stencil kernels.
//! * [`ratnet`]: the rational network that maps a 3-cell stencil to WENO3
//!   weights, with its weight-file format and cost accounting.
//! * [`train`]: loss with hand-written reverse-mode gradients, Adam,
//!   learning-rate schedule, sweeps and convergence-order model selection.
//! * [`solver`]: 1D finite-volume method of lines for linear advection and
//!   inviscid Burgers with exact reference solutions.
//! * [`analysis`]: convergence studies, approximate dispersion relations and
//!   CSV report emission.

pub mod analysis;
pub mod error;
pub mod fmt;
pub mod funcspace;
pub mod ratnet;
pub mod reconstruct;
pub mod scheme;
pub mod solver;
pub mod train;

pub use error::{Error, Result};
pub use scheme::Scheme;

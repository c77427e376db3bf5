//! Numerical laboratory for the spectral statistics of one-dimensional
//! Schrödinger operators `H = -d²/dt² + a(t) F(X_t)` with a random decaying
//! potential driven by Brownian motion on a torus.
//!
//! The crate has three layers:
//!
//! * operator side — [`torus`] builds the random potential and its spectral
//!   constants, [`prufer`] integrates the Prüfer phase along noise paths, and
//!   [`spectrum`] turns phases into Dirichlet eigenvalue point processes via
//!   Sturm oscillation;
//! * limit side — [`limit_sde`] simulates the limiting diffusions (coupled
//!   phase SDE, reduced relative-phase SDE, log-tan diffusion with explosion
//!   and restart, stationary envelope approximations) and [`explosion`]
//!   evaluates the mean-explosion-time analytics in closed or quadrature form;
//! * verification — [`stats`] holds the distributional tests and diagnostic
//!   functionals, [`config`]/[`driver`] parse experiment files and fan Monte
//!   Carlo ensembles across workers.

pub mod config;
pub mod driver;
mod error;
pub mod explosion;
pub mod limit_sde;
pub mod prufer;
pub mod report;
mod rng;
pub mod special;
pub mod spectrum;
pub mod stats;
pub mod torus;

pub use error::LabError;
pub use rng::{stream_rng, StreamId};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, LabError>;

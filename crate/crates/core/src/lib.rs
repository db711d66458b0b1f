//! Information content `-log f(X)` of log-concave random vectors.
//!
//! The crate evaluates the information content for a family of log-concave
//! models and checks the known concentration, moment and equipartition
//! inequalities against it, either exactly (quadrature on one-dimensional
//! densities) or statistically (Monte Carlo with confidence intervals).
//!
//! Module map:
//!
//! - [`numerics`]: special functions, adaptive quadrature, root finding.
//! - [`distributions`]: one-dimensional zoo, compositional n-dimensional
//!   models, reproducible random streams, JSON model specs.
//! - [`infotools`]: deviation batches and Monte Carlo estimates.
//! - [`bounds`]: closed-form bound evaluators and the verdict comparator.
//! - [`lyapunov`]: moment curves and (reverse) Lyapunov checks.
//! - [`aep`]: equipartition simulations for log-concave processes.
//! - [`cli`]: experiment configuration and runner used by the binary.

#![forbid(unsafe_code)]

pub mod aep;
pub mod bounds;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod infotools;
pub mod lyapunov;
pub mod numerics;

pub use error::{Error, Result};

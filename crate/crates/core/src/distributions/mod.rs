//! The log-concave model zoo: one-dimensional families, compositional
//! n-dimensional models, random streams and the JSON model schema.

mod linalg;
mod model;
mod rng;
mod sampler;
mod spec;
mod univariate;

pub use linalg::{Lu, Matrix};
pub use model::{log_ball_volume, ModelND, Structure};
pub use rng::{RngStream, StreamRng};
pub use sampler::EnvelopeSampler;
pub use spec::ModelSpec;
pub use univariate::{make_standard, Density1D, Family1D};

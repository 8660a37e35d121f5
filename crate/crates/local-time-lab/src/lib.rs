//! Numerical laboratory for Brownian local times: heat-kernel and Hermite
//! identities, Riesz-type kernels, chaos kernels of the `L²` modulus and their
//! limiting variances, singular simplex integrals, path simulation, and an
//! experiment runner.

pub mod brownian;
pub mod chaos;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod quad;
pub mod riesz;
pub mod rng;
pub mod simplex;
pub mod stats;
pub mod variance;

//! Finite-blocklength QoS analysis for a satellite/UAV/ground network.
//!
//! Aggregate interference is modeled with Poisson point processes and
//! evaluated analytically (Laplace transforms, Campbell moments, Gamma
//! surrogate) and by Monte Carlo. On top of it sit the decoding-error,
//! outage and ε-effective-capacity metrics and a tier-association model.

pub mod association;
pub mod channel;
pub mod error;
pub mod fbc;
pub mod geometry;
pub mod interference;
pub mod mc;
pub mod qos;
pub mod quad;
pub mod runner;
pub mod scenario;
pub mod special;

pub use error::{Error, Result};

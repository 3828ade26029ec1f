//! Jump-diffusion asset models: seeded simulation, calibration from daily
//! price series (Gibbs sampler and median-multiple jump detector), and Monte
//! Carlo pricing of European calls and variable-annuity guarantees against
//! the no-jump Black-Scholes baseline.

pub mod data_io;
pub mod error;
mod gibbs;
pub mod inference;
pub mod models;
pub mod pricing;
pub mod rng;

pub use error::{Error, Result};

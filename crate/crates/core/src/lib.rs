//! Incoherent learning of quantum processes from classical shadows.
//!
//! The crate simulates the measurement phase (classical shadows of a target
//! unitary's outputs), persists the records, and trains parameterized circuits
//! against shadow-estimated costs. A separate module checks the sample
//! complexity lower bound for product measurements numerically.

pub mod cli;
pub mod costs;
pub mod error;
pub mod hardness;
pub mod locality;
pub mod operator;
pub mod rng;
pub mod shadows;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};

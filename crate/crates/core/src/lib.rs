//! Time-slotted simulator for fairness-aware task delegation across
//! wireless federated-learning servers, with contract-based client
//! incentives.

pub mod channel;
pub mod cli;
pub mod contract;
pub mod controller;
pub mod engine;
pub mod error;
pub mod fairness;
pub mod mobility;
pub mod rng;

pub use error::{Error, Result};

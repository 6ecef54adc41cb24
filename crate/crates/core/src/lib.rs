//! Decentralized vector multiple access channels with water-filling
//! transmitters: finite-size simulation, large-system analysis and
//! bandwidth-limiting experiments.

pub mod asymptotic;
pub mod channel_model;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod quadrature;
pub mod simulator;
pub mod table;
pub mod waterfill;

pub use error::{Error, Result};

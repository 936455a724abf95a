//! Simulator for quantum clock synchronization over a satellite network.
//!
//! The crate is organised bottom-up:
//!
//! - [`geo`]: circular orbits, rotating ground stations, line-of-sight geometry.
//! - [`link`]: Gaussian-beam and atmospheric link budget, ebit rates.
//! - [`traces`]: connection and sync traces, figures of merit, shadows, sweeps.
//! - [`timestamps`]: photon-level Monte Carlo of the two-way offset exchange.
//! - [`scenario`]: TOML scenario files and the runners behind the `qcs` tool.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geo;
pub mod link;
pub mod scenario;
pub mod timestamps;
pub mod traces;

pub use error::{QcsError, Result};

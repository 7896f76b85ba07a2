//! # mmee-core
//!
//! Energy-efficient downlink power allocation for single-cell massive MIMO.
//!
//! A base station with `M` antennas serves `K` single-antenna users on one
//! resource block under MRT precoding. The crate models the channel and the
//! achievable rates, and maximizes the system energy efficiency (delivered
//! bits per Joule, counting transmit and per-antenna circuit power) subject
//! to a sum-power budget and per-user minimum-rate targets:
//!
//! - [`channel`] — seeded user drops, log-normal shadowing, Rayleigh fast
//!   fading, channel composition, and MRT precoders.
//! - [`ratemodel`] — exact SINR/rates plus the hardening lower bounds and
//!   the efficiency metric with its subtractive (root-form) objective.
//! - [`solver`] — the iterative maximizer: a fractional-programming outer
//!   update, projected-subgradient constraint pricing, and a fixed-point
//!   power update that is a standard interference function.
//! - [`verify`] — an exhaustive grid oracle and randomized checks of the
//!   structural properties the solver relies on.
//! - [`experiment`] — deterministic Monte Carlo sweeps, config-file
//!   ingestion, and CSV emission.
//!
//! ```
//! use mmee_core::channel::sample_large_scale;
//! use mmee_core::config::SystemConfig;
//! use mmee_core::solver::{solve, SolverParams};
//!
//! let config = SystemConfig::default();
//! let drop = sample_large_scale(&config, 42).unwrap();
//! let result = solve(&config, &drop.beta, &SolverParams::defaults(&config)).unwrap();
//! assert!(result.q_star > 0.0);
//! ```

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod ratemodel;
pub mod solver;
pub mod verify;

pub use config::SystemConfig;
pub use error::{Error, Result};

//! Stability analysis of the Wonham filter through its dual control system.
//!
//! A finite-state Markov chain with rate matrix `A` is observed through
//! `dZ = h(X) dt + dW`, and the Wonham filter tracks the posterior of the
//! state. This crate provides:
//!
//! - [`model`] — problem instances, validation, ergodic decomposition, and
//!   invariant measures;
//! - [`analysis`] — the controllable subspace of the dual system, the three
//!   equivalent stabilizability tests, and the instability witness;
//! - [`paths`] — exact simulation of the signal chain and gridded
//!   observations with reproducible per-trial random streams;
//! - [`filter`] — a positivity-preserving split-step discretization of the
//!   posterior dynamics plus innovation and covariance sequences;
//! - [`dual`] — backward solutions of the dual equation for deterministic
//!   controls, the associated estimator and cost, and Monte Carlo checks of
//!   the duality and minimum-value identities;
//! - [`experiments`] — end-to-end stability, detection, splitting,
//!   martingale, monotonicity, and instability experiments;
//! - [`cli`] — the `wonham` command-line front end.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dual;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod linalg;
pub mod model;
pub mod output;
pub mod paths;

pub use config::NumericsConfig;
pub use error::{Error, Result};
pub use model::{HmmModel, ProbabilityVector};

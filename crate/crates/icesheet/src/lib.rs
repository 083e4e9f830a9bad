//! Stochastic ice-sheet length model: deterministic equilibrium and
//! bifurcation analysis, Monte Carlo SDE simulation, Fokker-Planck maximal
//! likely trajectories, and Onsager-Machlup most probable transition paths.
//!
//! State is the ice-sheet length X (km); time runs in kiloyears. The SDE is
//! `dX = f(X) dt + eps sqrt(X) dB` with
//! `f(X) = -(beta lambda/sqrt(2 sigma))(3/4 X^{3/2} - r X^{1/2}) + beta X/3`
//! and `eps = beta eps0 / sqrt(2 sigma)`.

// Validation predicates use the negated form (`!(x > 0.0)`) on purpose:
// it also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod analysis;
pub mod config;
pub mod error;
pub mod fokker_planck;
pub mod io;
pub mod linalg;
pub mod model;
pub mod sde;

pub use error::{Error, Result};
pub use model::ModelParams;

//! Steady-state analysis of a driven optomechanical cavity with laser phase
//! noise: branches and bistability, the stationary covariance matrix from a
//! Lyapunov equation, phonon occupation and logarithmic negativity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod covariance;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod params;
pub mod pipeline;
pub mod steady_state;
pub mod sweep;

pub use error::{Error, Result};

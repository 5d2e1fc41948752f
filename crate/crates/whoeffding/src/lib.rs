//! Hoeffding-type concentration bounds for bounded Lipschitz functionals of
//! Markov models that converge to equilibrium in L1-Wasserstein distance,
//! without any irreducibility assumption.
//!
//! The crate provides:
//! - exact 1-D Wasserstein distances on intervals and circles, with a
//!   transport-LP oracle for cross-checking ([`measures`]);
//! - the three example models (deterministic flow, binary AR(1), random walk
//!   on the torus) with exact t-step laws ([`models`]);
//! - subordination (random time change) by discrete i.i.d. and Poisson
//!   subordinators, Bernstein exponents and rate propagation
//!   ([`subordination`]);
//! - the ergodicity coefficient gamma, the Hoeffding tail bound, the Poisson
//!   equation solution and martingale checks ([`concentration`]);
//! - a seeded Monte Carlo harness that certifies the bound against empirical
//!   tail probabilities ([`harness`]).

pub mod concentration;
pub mod error;
pub mod harness;
pub mod markov;
pub mod measures;
pub mod models;
pub mod numeric;
pub mod subordination;

pub use error::{Error, Result};

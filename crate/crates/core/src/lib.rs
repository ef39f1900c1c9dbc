//! Entanglement dynamics of two interacting spins in a constant magnetic
//! field, `H = e1 B0 S1z + e2 B0 S2z + alpha S1x S2x`.
//!
//! The crate covers the quantum side (spin states, exact spectral
//! propagation, reduced density matrices, entropies), the classical limit of
//! two large spins (canonical flow, Poincaré sections, Lyapunov exponents),
//! preset scenarios for the three regimes, and the `spindyn` command-line
//! front end.

pub mod classical;
pub mod cli;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod scenarios;
pub mod spin;

pub use error::{Error, Result};

//! Core algorithms for studying the Chvátal–Sankoff constant γ through
//! transposition networks and particle processes.
//!
//! The crate is `no_std` (it needs `alloc`) and strictly sequential; the
//! `cslab` companion crate adds parallel drivers, file formats and the CLI.
//!
//! * [`lcs`]: binary strings and three LCS engines.
//! * [`network`]: the LCS grid as a transposition network with step initial
//!   condition, evolved diagonally in half-steps.
//! * [`model_b`]: the Bernoulli network model (discrete-time TASEP with
//!   sublattice-parallel update) on a ring.
//! * [`fit`]: the polynomial system fitting model B to the string model, its
//!   Newton solver and closed-form root.
//! * [`scaling`]: rarefaction profiles of concave fluxes and empirical
//!   density profiles of both models.
//! * [`mc`]: direct Monte Carlo estimation of γ.
//! * [`verify`]: the exact (zero-tolerance) invariant suite.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bits;
mod error;
pub mod fit;
pub mod lcs;
pub mod mc;
pub mod model_b;
pub mod network;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use lcs::{BinaryString, Engine, LcsResult};
pub use network::SiteSequence;
pub use rng::Seed;

//! Exact repeated-use quantum state transfer through U(1)-symmetric spin chains.
//!
//! A sender qubit is attached to one end of a spin chain, the chain evolves, and
//! the receiver qubit at the far end is read out and replaced; the channel itself
//! is never reset. Excitations left behind by earlier uses degrade later
//! transfers. This crate computes the n-th-use average fidelity in closed form
//! and cross-checks every analytic route against brute-force simulation.
//!
//! - [`chain`]: single-particle Hamiltonians and transition amplitudes `f_i^j(t)`.
//! - [`kernel`]: Motzkin-path expansion of the memory factor, reduced to
//!   boundary amplitudes only, and the n-th-use fidelity.
//! - [`oracle`]: sector-resolved many-body simulation of the protocol, and the
//!   general U(1) fidelity formula for interacting chains.
//! - [`channel`]: per-use single-qubit maps, their GAD/dephasing factorization,
//!   Choi certification and capacity bounds.
//! - [`entanglement`]: Wootters concurrence of a Bell pair sent through the channel.
//! - [`validation`]: seeded property suites used by the `validate` command.

pub mod chain;
pub mod channel;
pub mod entanglement;
mod error;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod validation;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// PST time of the `sqrt(i(N-i))` coupling scheme.
pub const PST_TIME: f64 = std::f64::consts::FRAC_PI_2;

/// Average fidelity reachable with local operations and classical communication.
pub const LOCC_LIMIT: f64 = 2.0 / 3.0;

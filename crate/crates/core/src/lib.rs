//! Executable reduction from Turing-machine halting to unitary hitting times.
//!
//! A deterministic machine is compiled into a reversible step map on
//! extended basis labels (work register with history, clock, halt flag and
//! beacon bit). That permutation is lifted to continuous time by a
//! piecewise-constant pulse Hamiltonian, and the hitting time of the beacon
//! subspace is semi-decided on a rational grid.
//!
//! Module map:
//! - [`machine`]: machine model, classical execution, text format.
//! - [`reversible`]: the beacon-augmented reversible step and its inverse.
//! - [`dynamics`]: sparse states, integer and mid-pulse evolution, fidelity,
//!   and the dense approximation oracle.
//! - [`hitting`]: grid semi-decider and time-step selector.
//! - [`reduction`]: instance encoder, corpus verification, counter family.
//! - [`protocol`]: budgeted decision protocols, adversarial sweeps, noise.

pub mod dynamics;
pub mod hitting;
pub mod machine;
pub mod protocol;
pub mod rational;
pub mod reduction;
pub mod reversible;

mod error;

pub use error::{Error, Result};
pub use rational::Rational;

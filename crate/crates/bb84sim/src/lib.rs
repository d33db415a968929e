//! Density-matrix simulation of individual and collective eavesdropping
//! attacks on BB84, where the attack unitary is a parameterised circuit that
//! can be trained by gradient descent against the intercepted states.
//!
//! The crate is organised in layers:
//!
//! - [`qmat`]: dense complex matrices, density operators, eigensolver,
//!   fidelity measures;
//! - [`circuits`]: gates, parameterised circuits, the hardware-efficient
//!   ansatz, partial trace;
//! - [`channels`]: single-qubit Kraus noise channels;
//! - [`bb84`]: protocol states, attack scenarios, the sifted-case fidelity
//!   report, and a Monte Carlo protocol run;
//! - [`attacks`]: closed-form reference attacks (phase-covariant cloning and
//!   its imbalanced generalisation) used as oracles for training;
//! - [`qcl`]: parameter-shift gradients and the Adam training loop;
//! - [`collective`]: two-qubit joint measurement of Eve's stored copies and
//!   the Helstrom bound on its success probability;
//! - [`cli`]: config-file driven entry points shared by the `bb84sim` binary.

pub mod attacks;
pub mod bb84;
pub mod channels;
pub mod circuits;
pub mod cli;
pub mod collective;
pub mod error;
pub mod qcl;
pub mod qmat;

pub use error::{Error, Result};

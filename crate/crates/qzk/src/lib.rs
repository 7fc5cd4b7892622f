//! Quantum interactive proof systems as explicit unitary circuits, with the protocol
//! rewrites (parallelization, public coins, perfect completeness, repetition, FAIL-allowing
//! simulators, rewinding) and numerical checks of their guarantees.

pub mod analysis;
pub mod circuits;
pub mod error;
pub mod fixtures;
pub mod kernel;
pub mod linalg;
pub mod qip;
pub mod protocol;
pub mod qla;
pub mod report;
pub mod simulator;
pub mod suite;
pub mod tol;
pub mod transforms;
pub mod zk;

pub use error::{QzkError, Result};

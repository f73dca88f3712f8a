//! Simulation of generalized, partially destructive quantum measurements on
//! finite-dimensional systems.
//!
//! A measurement is described by a family of probe states, output states and
//! multiplicity weights. From it the crate builds the measurement isometry,
//! applies dephasing, extracts the POVM and contracts the result onto the
//! meter. The [`bloch`] and [`information`] modules specialize this to the
//! continual nonselected measurement of a qubit, where output states are drawn
//! from a compressed Bloch sphere, and compute entanglement and Holevo
//! information curves.

pub mod bloch;
pub mod cli;
pub mod error;
pub mod information;
pub mod measurement;
pub mod oracle;
pub mod qstate;

pub use error::{Error, Result};

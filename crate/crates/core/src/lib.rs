//! Simulation and analysis of measurement-induced phase transitions in
//! sparse nonlocal monitored circuits.
//!
//! - [`circuit`] builds gate schedules and measurement placements.
//! - [`stabilizer`] evolves stabilizer tableaux and measures entanglement.
//! - [`oracle`] is a dense statevector reference for small systems.
//! - [`percolation`] solves the Haar-limit bond percolation problem.
//! - [`analysis`] performs finite-size scaling.
//! - [`qecc`] computes code rate, code distance and Hamming bounds.
//! - [`rg`] solves the block-decimation recursion of the complete circuit.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod gf2;
pub mod oracle;
pub mod percolation;
pub mod qecc;
pub mod rg;
pub mod seed;
pub mod stabilizer;

pub use error::{Error, Result};

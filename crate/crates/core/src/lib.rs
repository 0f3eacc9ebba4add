//! Simulation toolkit for a complete, nondestructive Bell-state measurement
//! of two remote atomic qubits.
//!
//! Two weak coherent photon pulses are reflected in turn from an atom–cavity
//! system at each of two network nodes. Each reflection acts as an
//! atom–photon CNOT, so detecting the polarisation of one photon reveals the
//! joint parity of the atoms. A pair of parity measurements interleaved with
//! local `π/2` rotations discriminates all four Bell states and leaves the
//! atoms in the detected one.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: dense complex linear algebra on labelled tensor spaces,
//!   density operators, Pauli/Stokes expansions, channels and superoperators.
//! - [`cavity`]: the atom–photon interface, both the ideal CNOT truth table
//!   and a steady-state reflection channel built from cavity-QED parameters.
//! - [`pulses`]: weak coherent pulse statistics, optical loss, polarisation
//!   errors and the threshold single-photon detector.
//! - [`protocol`]: parity measurement, the two-ancilla Bell-state
//!   measurement, outcome classification, and the efficiency/Zeno timing model.
//! - [`tomography`]: linear-inversion state tomography and POVM tomography
//!   from the 36 product probe states.
//!
//! Bell states are always ordered `(Φ+, Φ−, Ψ+, Ψ−)`.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod error;
pub mod protocol;
pub mod pulses;
pub mod qstate;
pub mod tomography;

pub use error::{Error, Result};

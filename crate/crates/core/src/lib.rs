//! Multi-fidelity simulator for the driven Lipkin-Meshkov-Glick (LMG) model
//! realised with qubits coupled through a common bus resonator.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`] builds spaces, collective spin and Pauli-string operators,
//!   the symmetric (Dicke) embedding and the joint parity operator.
//! * [`model`] holds the device description, the effective LMG Hamiltonian,
//!   the rotating-frame circuit-QED Hamiltonian, noise channels and the quench
//!   schedule.
//! * [`dynamics`] integrates the Schrödinger and Lindblad equations with a
//!   fixed-step RK4 scheme.
//! * [`observables`] computes populations, correlations, fringe fits, GHZ
//!   fidelities and the multi-qubit spin Wigner function.
//! * [`spectrum`] performs parity-resolved static analysis.
//! * [`runner`] turns experiment configs into CSV/JSON outputs.
//!
//! Units: angular frequencies in rad/ns, times in ns, ħ = 1.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod observables;
pub mod par;
pub mod runner;
pub mod sparse;
pub mod spectrum;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

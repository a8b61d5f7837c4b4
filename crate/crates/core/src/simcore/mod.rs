//! Dense statevector simulation of the rotation gate alphabet.
//!
//! Amplitude index `k` stores qubit 0 in its most significant bit, matching the
//! rendered bitstrings (qubit 0 leftmost). Gates update amplitudes in place with
//! stride iteration and never build a full unitary.

mod gate;
mod noise;
mod sample;
mod state;

pub use gate::{Gate, GateKind};
pub use noise::{sample_noisy, NoiseModel, Pauli};
pub use sample::{sample, MeasurementRecord};
pub(crate) use state::expectation_with_diagonal;
pub use state::{apply_gate, exact_expectation, run_circuit, StateVector};

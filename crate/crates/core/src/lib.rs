//! Quantum circuit evolution (QCE) for set partitioning problems encoded as QUBOs.
//!
//! The crate is organised bottom-up:
//!
//! - [`problem`]: instances, the penalty QUBO, feasibility, Ising form and the
//!   brute-force oracle.
//! - [`simcore`]: a dense statevector simulator for the nine-gate alphabet, shot
//!   sampling and Monte Carlo Pauli-trajectory noise.
//! - [`genome`]: evolving circuits and their four mutation operators.
//! - [`qce`]: the evolutionary loop with the default and adaptive cost functions.
//! - [`qaoa`]: the single-layer QAOA baseline driven by Nelder–Mead.
//! - [`harness`]: solver dispatch, repeated benchmark runs and CSV reports.

pub mod error;
pub mod genome;
pub mod harness;
pub mod problem;
pub mod qaoa;
pub mod qce;
pub mod rng;
pub mod simcore;

pub use error::{Error, Result};
pub use genome::{CircuitGenome, MutationConfig, MutationKind, SwapMode};
pub use problem::{
    brute_force, generate_instance, Bitstring, BruteForceResult, Instance, IsingHamiltonian,
    Partition, PenaltyPolicy, QuboModel,
};
pub use qaoa::{QaoaConfig, QaoaParams, QaoaResult};
pub use qce::{
    evolve, ratio, CostBranch, CostFunctionKind, CostReport, EvolutionConfig, EvolutionResult,
    GenerationLog,
};
pub use simcore::{Gate, GateKind, MeasurementRecord, NoiseModel, StateVector};

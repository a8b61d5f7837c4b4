//! Monte Carlo Pauli-trajectory noise.
//!
//! After every two-qubit gate a shot's trajectory receives, with probability `p`,
//! one of the 15 non-identity two-qubit Paulis drawn uniformly. After the outcome
//! draw each readout bit flips independently with probability `q`.
//!
//! Shots with the same error pattern share one simulation; the error-free pattern
//! reuses the noiseless state, and every other pattern resumes from the noiseless
//! prefix just before its first error.

use std::collections::HashMap;

use rand::Rng;

use super::gate::Gate;
use super::sample::{cumulative, draw, outcome_uniform, MeasurementRecord};
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// The `code`-th two-qubit Pauli, `code` in `0..16`, `0` being `I (x) I`.
    pub fn pair(code: usize) -> (Pauli, Pauli) {
        (Self::ALL[code / 4], Self::ALL[code % 4])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub two_qubit_depolarizing_p: f64,
    pub readout_flip_q: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            two_qubit_depolarizing_p: 0.01,
            readout_flip_q: 0.02,
        }
    }
}

impl NoiseModel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("depolarizing probability", p), ("readout flip probability", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} {v} not in [0, 1]")));
            }
        }
        Ok(Self {
            two_qubit_depolarizing_p: p,
            readout_flip_q: q,
        })
    }

    pub fn is_noiseless(&self) -> bool {
        self.two_qubit_depolarizing_p == 0.0 && self.readout_flip_q == 0.0
    }
}

/// (gate position, two-qubit Pauli code in 1..16)
type ErrorPattern = Vec<(usize, usize)>;

pub fn sample_noisy(
    gates: &[Gate],
    num_qubits: usize,
    shots: u64,
    noise: &NoiseModel,
    rng_seed: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    for g in gates {
        g.validate(num_qubits)?;
    }
    let p = noise.two_qubit_depolarizing_p;
    let q = noise.readout_flip_q;
    let two_qubit: Vec<usize> = (0..gates.len()).filter(|&i| gates[i].is_two_qubit()).collect();

    // Draw every shot's error pattern and readout mask up front.
    let mut by_pattern: HashMap<ErrorPattern, Vec<(u64, usize)>> = HashMap::new();
    for shot in 0..shots {
        let mut pattern = ErrorPattern::new();
        let mut flips = 0usize;
        if !noise.is_noiseless() {
            let mut rng = rng::stream(rng_seed, &[rng::tag::NOISE, shot]);
            if p > 0.0 {
                for &pos in &two_qubit {
                    if rng.gen::<f64>() < p {
                        pattern.push((pos, rng.gen_range(1..16)));
                    }
                }
            }
            if q > 0.0 {
                for qubit in 0..num_qubits {
                    if rng.gen::<f64>() < q {
                        flips |= 1 << (num_qubits - 1 - qubit);
                    }
                }
            }
        }
        by_pattern.entry(pattern).or_default().push((shot, flips));
    }

    // Noiseless prefix snapshots at each gate position that carries an error.
    let mut first_errors: Vec<usize> = by_pattern
        .keys()
        .filter_map(|pat| pat.first().map(|&(pos, _)| pos))
        .collect();
    first_errors.sort_unstable();
    first_errors.dedup();
    let mut snapshots: HashMap<usize, StateVector> = HashMap::new();
    let mut clean = StateVector::zero(num_qubits);
    let mut next = first_errors.iter().peekable();
    for (pos, g) in gates.iter().enumerate() {
        clean.apply_unchecked(g);
        if next.peek() == Some(&&pos) {
            snapshots.insert(pos, clean.clone());
            next.next();
        }
    }

    let mut counts: HashMap<usize, u64> = HashMap::new();
    for (pattern, members) in &by_pattern {
        let state = match pattern.first() {
            None => clean.clone(),
            Some(&(start, _)) => {
                let mut psi = snapshots[&start].clone();
                let mut errors = pattern.iter().peekable();
                for (pos, g) in gates.iter().enumerate().skip(start) {
                    if pos > start {
                        psi.apply_unchecked(g);
                    }
                    while let Some(&&(epos, code)) = errors.peek() {
                        if epos != pos {
                            break;
                        }
                        let (pa, pb) = Pauli::pair(code);
                        let qs = g.qubits();
                        psi.apply_pauli(qs[0], pa);
                        psi.apply_pauli(qs[1], pb);
                        errors.next();
                    }
                }
                psi
            }
        };
        let cdf = cumulative(&state);
        for &(shot, flips) in members {
            let k = draw(&cdf, outcome_uniform(rng_seed, shot)) ^ flips;
            *counts.entry(k).or_insert(0) += 1;
        }
    }
    Ok(MeasurementRecord::from_index_counts(counts, num_qubits))
}

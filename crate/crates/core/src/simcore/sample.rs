use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::problem::Bitstring;
use crate::rng;

/// Histogram of measured bitstrings from one circuit evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    counts: BTreeMap<Bitstring, u64>,
    total_shots: u64,
}

impl MeasurementRecord {
    pub fn from_counts(counts: BTreeMap<Bitstring, u64>) -> Result<Self> {
        let counts: BTreeMap<_, _> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let total_shots = counts.values().sum();
        if total_shots == 0 {
            return Err(Error::InvalidArgument("empty measurement record".into()));
        }
        if let Some(width) = counts.keys().next().map(Bitstring::len) {
            if counts.keys().any(|b| b.len() != width) {
                return Err(Error::InvalidArgument("mixed bitstring widths".into()));
            }
        }
        Ok(Self {
            counts,
            total_shots,
        })
    }

    pub(crate) fn from_index_counts(counts: HashMap<usize, u64>, num_qubits: usize) -> Self {
        let counts: BTreeMap<_, _> = counts
            .into_iter()
            .map(|(k, c)| (Bitstring::from_index(k, num_qubits), c))
            .collect();
        let total_shots = counts.values().sum();
        Self {
            counts,
            total_shots,
        }
    }

    pub fn counts(&self) -> &BTreeMap<Bitstring, u64> {
        &self.counts
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn count(&self, x: &Bitstring) -> u64 {
        self.counts.get(x).copied().unwrap_or(0)
    }

    pub fn num_distinct(&self) -> usize {
        self.counts.len()
    }
}

/// One `bitstring count` line per measured string.
impl fmt::Display for MeasurementRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, c) in &self.counts {
            writeln!(f, "{b} {c}")?;
        }
        Ok(())
    }
}

/// Uniform in `[0, 1)` for outcome draw `shot`; shared by the noiseless and noisy paths
/// so a zero-noise trajectory reproduces the noiseless record exactly.
pub(crate) fn outcome_uniform(seed: u64, shot: u64) -> f64 {
    (rng::derive(seed, &[rng::tag::OUTCOME, shot]) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn cumulative(state: &StateVector) -> Vec<f64> {
    let mut acc = 0.0;
    state
        .amplitudes()
        .iter()
        .map(|a| {
            acc += a.norm_sqr();
            acc
        })
        .collect()
}

/// Inverse-CDF lookup; the scaled draw guards against a total mass slightly below 1.
pub(crate) fn draw(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Draws `shots` i.i.d. outcomes from `|amplitude|^2`.
pub fn sample(state: &StateVector, shots: u64, rng_seed: u64) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let cdf = cumulative(state);
    let mut counts = HashMap::new();
    for shot in 0..shots {
        *counts.entry(draw(&cdf, outcome_uniform(rng_seed, shot))).or_insert(0) += 1;
    }
    Ok(MeasurementRecord::from_index_counts(counts, state.num_qubits()))
}

//! The cost functions a candidate circuit can be scored with.
//!
//! - DCF exact: `<0|U^dag H_C U|0>` from the statevector.
//! - DCF sampled: the shot average `(1/N_t) sum_x f_x C(x)`.
//! - ACF: the shot average restricted to feasible strings when any were measured,
//!   otherwise the average with the most frequent violation removed.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::genome::CircuitGenome;
use crate::problem::{Bitstring, IsingHamiltonian, QuboModel};
use crate::simcore::{exact_expectation, run_circuit, MeasurementRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CostBranch {
    Exact,
    FullAverage,
    FeasibleOnly,
    ViolationsMinusMode,
}

impl CostBranch {
    pub fn name(self) -> &'static str {
        match self {
            CostBranch::Exact => "exact",
            CostBranch::FullAverage => "full_average",
            CostBranch::FeasibleOnly => "feasible_only",
            CostBranch::ViolationsMinusMode => "violations_minus_mode",
        }
    }
}

impl fmt::Display for CostBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for CostBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            CostBranch::Exact,
            CostBranch::FullAverage,
            CostBranch::FeasibleOnly,
            CostBranch::ViolationsMinusMode,
        ]
        .into_iter()
        .find(|b| b.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown cost branch `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub value: f64,
    pub branch: CostBranch,
    pub feasible_shots: u64,
    pub violation_shots: u64,
    /// Cheapest feasible string in the record; ties keep the lexicographically smallest.
    pub best_feasible_seen: Option<(Bitstring, f64)>,
}

struct Scored<'a> {
    x: &'a Bitstring,
    shots: u64,
    cost: f64,
    feasible: bool,
}

fn score<'a>(record: &'a MeasurementRecord, model: &QuboModel) -> Result<Vec<Scored<'a>>> {
    record
        .counts()
        .iter()
        .map(|(x, &shots)| {
            Ok(Scored {
                x,
                shots,
                cost: model.cost(x)?,
                feasible: model.is_feasible(x)?,
            })
        })
        .collect()
}

fn tally(scored: &[Scored<'_>]) -> (u64, u64, Option<(Bitstring, f64)>) {
    let mut feasible_shots = 0;
    let mut violation_shots = 0;
    let mut best: Option<(&Bitstring, f64)> = None;
    // records iterate in lexicographic order, so a strict comparison keeps the smallest on ties
    for s in scored {
        if s.feasible {
            feasible_shots += s.shots;
            if best.is_none_or(|(_, c)| s.cost < c) {
                best = Some((s.x, s.cost));
            }
        } else {
            violation_shots += s.shots;
        }
    }
    (feasible_shots, violation_shots, best.map(|(x, c)| (x.clone(), c)))
}

fn weighted_mean<'a>(items: impl Iterator<Item = &'a Scored<'a>>, denominator: u64) -> f64 {
    items.map(|s| s.shots as f64 * s.cost).sum::<f64>() / denominator as f64
}

pub fn cost_dcf_exact(genome: &CircuitGenome, h: &IsingHamiltonian) -> Result<CostReport> {
    let state = run_circuit(genome.gates(), genome.num_qubits())?;
    Ok(CostReport {
        value: exact_expectation(&state, h)?,
        branch: CostBranch::Exact,
        feasible_shots: 0,
        violation_shots: 0,
        best_feasible_seen: None,
    })
}

pub fn cost_dcf_sampled(record: &MeasurementRecord, model: &QuboModel) -> Result<CostReport> {
    let scored = score(record, model)?;
    let (feasible_shots, violation_shots, best) = tally(&scored);
    Ok(CostReport {
        value: weighted_mean(scored.iter(), record.total_shots()),
        branch: CostBranch::FullAverage,
        feasible_shots,
        violation_shots,
        best_feasible_seen: best,
    })
}

pub fn cost_acf(record: &MeasurementRecord, model: &QuboModel) -> Result<CostReport> {
    let scored = score(record, model)?;
    let (feasible_shots, violation_shots, best) = tally(&scored);
    let total = record.total_shots();

    let (value, branch) = if feasible_shots > 0 {
        // N_t - |V| is the feasible shot mass.
        let value = weighted_mean(scored.iter().filter(|s| s.feasible), total - violation_shots);
        (value, CostBranch::FeasibleOnly)
    } else if scored.len() >= 2 {
        let mut mode = &scored[0];
        for s in &scored[1..] {
            if s.shots > mode.shots {
                mode = s;
            }
        }
        let value = weighted_mean(scored.iter().filter(|s| s.x != mode.x), total - mode.shots);
        (value, CostBranch::ViolationsMinusMode)
    } else {
        (weighted_mean(scored.iter(), total), CostBranch::FullAverage)
    };
    Ok(CostReport {
        value,
        branch,
        feasible_shots,
        violation_shots,
        best_feasible_seen: best,
    })
}

/// `oracle / best_cost`, clamped to `[0, 1]`; zero when nothing feasible was found.
pub fn ratio(best_feasible: Option<&(Bitstring, f64)>, oracle_optimum: f64) -> Result<f64> {
    if !(oracle_optimum > 0.0) {
        return Err(Error::NonPositiveOptimum(oracle_optimum));
    }
    Ok(match best_feasible {
        None => 0.0,
        Some((_, cost)) if *cost <= 0.0 => 1.0,
        Some((_, cost)) => (oracle_optimum / cost).clamp(0.0, 1.0),
    })
}

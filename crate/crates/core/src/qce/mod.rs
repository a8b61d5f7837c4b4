//! The quantum circuit evolution loop.
//!
//! Each generation spawns mutated offspring of the parent, measures every
//! candidate afresh, scores it with the configured cost function and promotes the
//! best one. With the adaptive cost, candidates whose record contained a feasible
//! string outrank all others regardless of raw value.

mod cost;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

pub use cost::{cost_acf, cost_dcf_exact, cost_dcf_sampled, ratio, CostBranch, CostReport};

use crate::error::{Error, Result};
use crate::genome::{random_initial, spawn_offspring, CircuitGenome, MutationConfig};
use crate::problem::{Bitstring, QuboModel};
use crate::rng;
use crate::simcore::{expectation_with_diagonal, run_circuit, sample, sample_noisy, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostFunctionKind {
    DcfExact,
    DcfSampled,
    Acf,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub shots: u64,
    pub offspring: usize,
    pub max_generations: u64,
    /// Stop after this many generations without a parent-cost improvement.
    pub stall_window: u64,
    /// `rng_seed` is overwritten from the run seed by [`evolve`].
    pub mutation: MutationConfig,
    pub cost_kind: CostFunctionKind,
    pub noise: Option<NoiseModel>,
    /// Keep the parent in the selection pool.
    pub elitist: bool,
    pub target_cost: Option<f64>,
    /// Compare adaptive costs by raw value only, ignoring the feasible-branch preference.
    pub raw_value_selection: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            shots: 1024,
            offspring: 4,
            max_generations: 5000,
            stall_window: 500,
            mutation: MutationConfig::default(),
            cost_kind: CostFunctionKind::Acf,
            noise: None,
            elitist: true,
            target_cost: None,
            raw_value_selection: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 || self.offspring == 0 || self.max_generations == 0 || self.stall_window == 0 {
            return Err(Error::InvalidArgument(
                "shots, offspring, max_generations and stall_window must be positive".into(),
            ));
        }
        self.mutation.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub generation: u64,
    pub parent_cost: f64,
    pub parent_depth: usize,
    pub parent_length: usize,
    pub branch: CostBranch,
    pub best_feasible_so_far: Option<(Bitstring, f64)>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_genome: CircuitGenome,
    pub logs: Vec<GenerationLog>,
    pub best_feasible: Option<(Bitstring, f64)>,
    pub generations_used: u64,
}

/// Selection key: lower is better.
fn rank(report: &CostReport, config: &EvolutionConfig) -> (u8, f64) {
    let demoted = config.cost_kind == CostFunctionKind::Acf
        && !config.raw_value_selection
        && report.branch != CostBranch::FeasibleOnly;
    (demoted as u8, report.value)
}

fn better(a: (u8, f64), b: (u8, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn keep_best(best: &mut Option<(Bitstring, f64)>, candidate: &Option<(Bitstring, f64)>) {
    if let Some((x, c)) = candidate {
        let replace = match best {
            None => true,
            Some((bx, bc)) => *c < *bc || (*c == *bc && x < bx),
        };
        if replace {
            *best = Some((x.clone(), *c));
        }
    }
}

/// Index of the winning candidate; ties go to the lowest index.
fn select(reports: &[CostReport], config: &EvolutionConfig) -> usize {
    let mut winner = 0;
    for i in 1..reports.len() {
        if better(rank(&reports[i], config), rank(&reports[winner], config)) {
            winner = i;
        }
    }
    winner
}

struct Evaluator<'a> {
    model: &'a QuboModel,
    config: &'a EvolutionConfig,
    diagonal: Option<Vec<f64>>,
    run_seed: u64,
}

impl Evaluator<'_> {
    fn evaluate(&self, genome: &CircuitGenome, generation: u64, index: u64) -> Result<CostReport> {
        let n = genome.num_qubits();
        if let Some(diagonal) = &self.diagonal {
            let state = run_circuit(genome.gates(), n)?;
            return Ok(CostReport {
                value: expectation_with_diagonal(&state, diagonal),
                branch: CostBranch::Exact,
                feasible_shots: 0,
                violation_shots: 0,
                best_feasible_seen: None,
            });
        }
        let seed = rng::derive(self.run_seed, &[rng::tag::MEASURE, generation, index]);
        let record = match &self.config.noise {
            Some(noise) => sample_noisy(genome.gates(), n, self.config.shots, noise, seed)?,
            None => sample(&run_circuit(genome.gates(), n)?, self.config.shots, seed)?,
        };
        match self.config.cost_kind {
            CostFunctionKind::Acf => cost_acf(&record, self.model),
            _ => cost_dcf_sampled(&record, self.model),
        }
    }
}

/// Runs the evolution to a stopping criterion: best feasible cost reaching
/// `target_cost`, `stall_window` generations without improvement, or
/// `max_generations`. The result is a pure function of its arguments.
pub fn evolve(model: &QuboModel, config: &EvolutionConfig, run_seed: u64) -> Result<EvolutionResult> {
    config.validate()?;
    let started = Instant::now();
    let n = model.num_vars();
    let mutation = MutationConfig {
        rng_seed: rng::derive(run_seed, &[rng::tag::MUTATION]),
        ..config.mutation.clone()
    };
    let evaluator = Evaluator {
        model,
        config,
        diagonal: (config.cost_kind == CostFunctionKind::DcfExact).then(|| model.to_ising().diagonal()),
        run_seed,
    };

    let mut parent = random_initial(n, rng::derive(run_seed, &[rng::tag::INITIAL]))?;
    let mut best_feasible: Option<(Bitstring, f64)> = None;
    let mut best_key: Option<(u8, f64)> = None;
    let mut stalled = 0;
    let mut logs = Vec::new();

    for generation in 1..=config.max_generations {
        let mut pool = spawn_offspring(&parent, config.offspring, &mutation, generation);
        if config.elitist {
            pool.push(parent.clone());
        }
        let reports = pool
            .par_iter()
            .enumerate()
            .map(|(i, g)| evaluator.evaluate(g, generation, i as u64))
            .collect::<Result<Vec<_>>>()?;

        for r in &reports {
            keep_best(&mut best_feasible, &r.best_feasible_seen);
        }
        let winner = select(&reports, config);
        let chosen = &reports[winner];
        let key = rank(chosen, config);
        parent = pool.swap_remove(winner);

        if best_key.is_none_or(|b| better(key, b)) {
            best_key = Some(key);
            stalled = 0;
        } else {
            stalled += 1;
        }

        logs.push(GenerationLog {
            generation,
            parent_cost: chosen.value,
            parent_depth: parent.depth(),
            parent_length: parent.len(),
            branch: chosen.branch,
            best_feasible_so_far: best_feasible.clone(),
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });

        let reached = matches!((&best_feasible, config.target_cost), (Some((_, c)), Some(t)) if *c <= t + 1e-9);
        if reached || stalled >= config.stall_window {
            break;
        }
    }

    Ok(EvolutionResult {
        generations_used: logs.len() as u64,
        final_genome: parent,
        logs,
        best_feasible,
    })
}

pub const GENERATION_CSV_HEADER: &str =
    "generation,parent_cost,branch,depth,length,best_feasible_cost,cumulative_seconds";

/// Streams generation logs as CSV. An absent best feasible cost is an empty field.
pub fn write_generation_csv<W: Write>(mut out: W, logs: &[GenerationLog]) -> Result<()> {
    writeln!(out, "{GENERATION_CSV_HEADER}")?;
    for l in logs {
        let best = l
            .best_feasible_so_far
            .as_ref()
            .map(|(_, c)| c.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6}",
            l.generation, l.parent_cost, l.branch, l.parent_depth, l.parent_length, best, l.elapsed_seconds
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{brute_force, build_qubo, generate_instance, PenaltyPolicy};

    fn t1() -> QuboModel {
        let inst = include_str!("../../../../fixtures/t1.json").parse().unwrap();
        build_qubo(&inst, &PenaltyPolicy::Default).unwrap()
    }

    #[test]
    fn single_generation_bound() {
        let config = EvolutionConfig {
            max_generations: 1,
            ..EvolutionConfig::default()
        };
        let r = evolve(&t1(), &config, 1).unwrap();
        assert_eq!(r.logs.len(), 1);
        assert_eq!(r.generations_used, 1);
        assert_eq!(r.logs[0].generation, 1);
    }

    #[test]
    fn reproducible_logs() {
        let model = build_qubo(&generate_instance(4, 7, 3).unwrap(), &PenaltyPolicy::Default).unwrap();
        let config = EvolutionConfig {
            max_generations: 60,
            ..EvolutionConfig::default()
        };
        let strip = |r: EvolutionResult| {
            r.logs
                .into_iter()
                .map(|l| GenerationLog {
                    elapsed_seconds: 0.0,
                    ..l
                })
                .collect::<Vec<_>>()
        };
        let a = strip(evolve(&model, &config, 9).unwrap());
        let b = strip(evolve(&model, &config, 9).unwrap());
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].generation < w[1].generation));
    }

    #[test]
    fn t1_finds_optimum_with_target() {
        let config = EvolutionConfig {
            target_cost: Some(4.0),
            max_generations: 2000,
            ..EvolutionConfig::default()
        };
        let r = evolve(&t1(), &config, 5).unwrap();
        assert_eq!(r.best_feasible, Some(("001".parse().unwrap(), 4.0)));
        assert!(r.generations_used < 2000);
    }

    #[test]
    fn exact_elitist_parent_cost_is_non_increasing() {
        let model = build_qubo(&generate_instance(4, 6, 8).unwrap(), &PenaltyPolicy::Default).unwrap();
        let config = EvolutionConfig {
            cost_kind: CostFunctionKind::DcfExact,
            max_generations: 200,
            ..EvolutionConfig::default()
        };
        let r = evolve(&model, &config, 2).unwrap();
        let global = brute_force(&model).unwrap().global_min_cost;
        assert!(r.logs.windows(2).all(|w| w[1].parent_cost <= w[0].parent_cost + 1e-12));
        assert!(r.logs.iter().all(|l| l.parent_cost >= global - 1e-9));
    }

    fn report(value: f64, branch: CostBranch) -> CostReport {
        CostReport {
            value,
            branch,
            feasible_shots: 0,
            violation_shots: 0,
            best_feasible_seen: None,
        }
    }

    #[test]
    fn feasible_candidates_win_selection() {
        let reports = [
            report(3.0, CostBranch::ViolationsMinusMode),
            report(50.0, CostBranch::FeasibleOnly),
            report(1.0, CostBranch::FullAverage),
            report(40.0, CostBranch::FeasibleOnly),
            report(40.0, CostBranch::FeasibleOnly),
        ];
        let acf = EvolutionConfig::default();
        assert_eq!(select(&reports, &acf), 3);
        let raw = EvolutionConfig {
            raw_value_selection: true,
            ..EvolutionConfig::default()
        };
        assert_eq!(select(&reports, &raw), 2);
        let dcf = EvolutionConfig {
            cost_kind: CostFunctionKind::DcfSampled,
            ..EvolutionConfig::default()
        };
        assert_eq!(select(&reports, &dcf), 2);
    }

    #[test]
    fn csv_sink() {
        let r = evolve(
            &t1(),
            &EvolutionConfig {
                max_generations: 3,
                ..EvolutionConfig::default()
            },
            0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_generation_csv(&mut buf, &r.logs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], GENERATION_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 7);
    }

    #[test]
    fn rejects_bad_config() {
        let config = EvolutionConfig {
            shots: 0,
            ..EvolutionConfig::default()
        };
        assert!(evolve(&t1(), &config, 0).is_err());
    }
}

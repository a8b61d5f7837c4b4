//! Solver dispatch, repeated benchmark runs and their CSV reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::MutationConfig;
use crate::problem::{brute_force, build_qubo, generate_instance, Instance, PenaltyPolicy, BRUTE_FORCE_LIMIT};
use crate::qaoa::{self, EvalLog, QaoaConfig};
use crate::qce::{self, evolve, ratio, CostFunctionKind, EvolutionConfig, GenerationLog};
use crate::simcore::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Solver {
    #[serde(rename = "qce-acf")]
    QceAcf,
    #[serde(rename = "qce-dcf")]
    QceDcf,
    #[serde(rename = "qaoa")]
    Qaoa,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::QceAcf => "qce-acf",
            Solver::QceDcf => "qce-dcf",
            Solver::Qaoa => "qaoa",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qce-acf" => Ok(Solver::QceAcf),
            "qce-dcf" => Ok(Solver::QceDcf),
            "qaoa" => Ok(Solver::Qaoa),
            _ => Err(Error::UnknownSolver(s.to_string())),
        }
    }
}

/// Knobs shared by every solver run.
#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub shots: u64,
    pub max_generations: u64,
    pub stall_window: u64,
    pub offspring: usize,
    pub elitist: bool,
    pub layers: usize,
    pub max_evals: usize,
    pub restarts: usize,
    pub noise: Option<NoiseModel>,
    pub penalty: PenaltyPolicy,
    /// Replaces the brute-force optimum in the ratio.
    pub optimum: Option<f64>,
}

impl Default for SolveSettings {
    fn default() -> Self {
        let evo = EvolutionConfig::default();
        let qaoa = QaoaConfig::default();
        Self {
            shots: evo.shots,
            max_generations: evo.max_generations,
            stall_window: evo.stall_window,
            offspring: evo.offspring,
            elitist: evo.elitist,
            layers: qaoa.layers,
            max_evals: qaoa.max_evals,
            restarts: qaoa.restarts,
            noise: None,
            penalty: PenaltyPolicy::Default,
            optimum: None,
        }
    }
}

impl SolveSettings {
    pub fn evolution_config(&self, solver: Solver, target_cost: Option<f64>) -> EvolutionConfig {
        EvolutionConfig {
            shots: self.shots,
            offspring: self.offspring,
            max_generations: self.max_generations,
            stall_window: self.stall_window,
            mutation: MutationConfig::default(),
            cost_kind: match solver {
                Solver::QceAcf => CostFunctionKind::Acf,
                _ => CostFunctionKind::DcfSampled,
            },
            noise: self.noise,
            elitist: self.elitist,
            target_cost,
            raw_value_selection: false,
        }
    }

    pub fn qaoa_config(&self, seed: u64) -> QaoaConfig {
        QaoaConfig {
            layers: self.layers,
            shots: self.shots,
            max_evals: self.max_evals,
            restarts: self.restarts,
            rng_seed: seed,
            noise: self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub instance: String,
    pub solver: Solver,
    pub seed: u64,
    pub ratio: f64,
    pub generations_or_evals: u64,
    pub final_depth: usize,
    /// Empty when nothing feasible was found.
    pub best_feasible_cost: Option<f64>,
    /// `ok`, or the error that stopped the run.
    pub status: String,
    pub wall_seconds: f64,
}

impl RunResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Row recorded for a run that could not complete.
    pub fn failed(instance: &str, solver: Solver, seed: u64, err: &Error) -> Self {
        Self {
            instance: instance.to_string(),
            solver,
            seed,
            ratio: 0.0,
            generations_or_evals: 0,
            final_depth: 0,
            best_feasible_cost: None,
            status: format!("error: {err}"),
            wall_seconds: 0.0,
        }
    }
}

/// Per-generation or per-evaluation history of one run.
#[derive(Debug, Clone)]
pub enum SolverTrace {
    Generations(Vec<GenerationLog>),
    Evaluations { logs: Vec<EvalLog>, layers: usize },
}

impl SolverTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        match self {
            SolverTrace::Generations(logs) => qce::write_generation_csv(out, logs),
            SolverTrace::Evaluations { logs, layers } => qaoa::write_eval_csv(out, logs, *layers),
        }
    }
}

/// The feasible optimum the ratio is measured against.
pub fn oracle_optimum(instance: &Instance, settings: &SolveSettings) -> Result<f64> {
    if let Some(opt) = settings.optimum {
        return Ok(opt);
    }
    if instance.num_partitions() > BRUTE_FORCE_LIMIT {
        return instance.known_optimum().ok_or(Error::TooManyVariables(instance.num_partitions()));
    }
    let model = build_qubo(instance, &settings.penalty)?;
    brute_force(&model)?
        .best_feasible
        .map(|(_, c)| c)
        .ok_or(Error::Infeasible)
}

/// Runs one solver once. Wall time covers the solver call only.
pub fn run_solver(
    instance_id: &str,
    instance: &Instance,
    solver: Solver,
    settings: &SolveSettings,
    seed: u64,
) -> Result<(RunResult, SolverTrace)> {
    let model = build_qubo(instance, &settings.penalty)?;
    let optimum = oracle_optimum(instance, settings)?;

    let (best, count, depth, trace, wall) = match solver {
        Solver::QceAcf | Solver::QceDcf => {
            let config = settings.evolution_config(solver, Some(optimum));
            let started = Instant::now();
            let r = evolve(&model, &config, seed)?;
            let wall = started.elapsed().as_secs_f64();
            let depth = r.final_genome.depth();
            (r.best_feasible, r.generations_used, depth, SolverTrace::Generations(r.logs), wall)
        }
        Solver::Qaoa => {
            let h = model.to_ising();
            let config = settings.qaoa_config(seed);
            let started = Instant::now();
            let r = qaoa::optimize(&h, &model, &config)?;
            let wall = started.elapsed().as_secs_f64();
            let trace = SolverTrace::Evaluations {
                logs: r.logs,
                layers: config.layers,
            };
            (r.best_feasible, r.evals_used as u64, r.circuit_depth, trace, wall)
        }
    };

    let result = RunResult {
        instance: instance_id.to_string(),
        solver,
        seed,
        ratio: ratio(best.as_ref(), optimum)?,
        generations_or_evals: count,
        final_depth: depth,
        best_feasible_cost: best.map(|(_, c)| c),
        status: "ok".into(),
        wall_seconds: wall,
    };
    Ok((result, trace))
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub instances: Vec<(String, Instance)>,
    pub solvers: Vec<Solver>,
    pub repetitions: u64,
    pub base_seed: u64,
    /// Worker threads; 1 runs sequentially.
    pub jobs: usize,
    pub settings: SolveSettings,
}

/// Runs every (instance, solver) pair with seeds `base_seed..base_seed + repetitions`.
/// Failed runs become error rows. Row order is independent of `jobs`.
pub fn run_bench(plan: &BenchPlan) -> Result<Vec<RunResult>> {
    let mut cells = Vec::new();
    for (id, inst) in &plan.instances {
        for &solver in &plan.solvers {
            for r in 0..plan.repetitions {
                cells.push((id.as_str(), inst, solver, plan.base_seed + r));
            }
        }
    }
    let run = |&(id, inst, solver, seed): &(&str, &Instance, Solver, u64)| {
        match run_solver(id, inst, solver, &plan.settings, seed) {
            Ok((r, _)) => r,
            Err(e) => RunResult::failed(id, solver, seed, &e),
        }
    };
    if plan.jobs <= 1 {
        return Ok(cells.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(|| cells.par_iter().map(run).collect()))
}

/// Detail CSV; `wall_seconds` is the last column so timing can be stripped for comparisons.
pub fn write_detail_csv<W: Write>(out: W, rows: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_detail_csv<R: Read>(input: R) -> Result<Vec<RunResult>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub solver: Solver,
    pub runs: u64,
    pub failed: u64,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_seconds: f64,
}

/// Aggregates completed runs per (instance, solver), in first-appearance order.
pub fn summarize(rows: &[RunResult]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, Solver)> = Vec::new();
    let mut groups: BTreeMap<(String, Solver), Vec<&RunResult>> = BTreeMap::new();
    for r in rows {
        let key = (r.instance.clone(), r.solver);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let ok: Vec<&&RunResult> = group.iter().filter(|r| r.is_ok()).collect();
            let n = ok.len() as f64;
            let mean = |f: fn(&RunResult) -> f64| {
                if ok.is_empty() {
                    0.0
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / n
                }
            };
            SummaryRow {
                instance: key.0.clone(),
                solver: key.1,
                runs: ok.len() as u64,
                failed: (group.len() - ok.len()) as u64,
                mean_ratio: mean(|r| r.ratio),
                min_ratio: ok.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min).min(1.0),
                max_ratio: ok.iter().map(|r| r.ratio).fold(0.0, f64::max),
                mean_seconds: mean(|r| r.wall_seconds),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub table: String,
    pub warnings: Vec<String>,
}

/// Merges summaries into one table sorted by instance, then solver, followed by the
/// QAOA / QCE-ACF mean-time ratio for each instance that has both.
pub fn compare_summaries(summaries: &[Vec<SummaryRow>]) -> ComparisonReport {
    let mut warnings = Vec::new();
    let sets: Vec<BTreeSet<&str>> = summaries
        .iter()
        .map(|s| s.iter().map(|r| r.instance.as_str()).collect())
        .collect();
    if let Some(first) = sets.first() {
        for (i, other) in sets.iter().enumerate().skip(1) {
            let diff: Vec<&str> = first.symmetric_difference(other).copied().collect();
            if !diff.is_empty() {
                warnings.push(format!(
                    "summary 1 and summary {} cover different instances: {}",
                    i + 1,
                    diff.join(", ")
                ));
            }
        }
    }

    let mut merged: BTreeMap<(String, Solver), &SummaryRow> = BTreeMap::new();
    for row in summaries.iter().flatten() {
        merged.insert((row.instance.clone(), row.solver), row);
    }

    let mut table = String::new();
    let header = format!(
        "{:<12} {:<8} {:>5} {:>10} {:>9} {:>9} {:>12}\n",
        "instance", "solver", "runs", "mean_ratio", "min", "max", "mean_secs"
    );
    table.push_str(&header);
    table.push_str(&"-".repeat(header.len() - 1));
    table.push('\n');
    for row in merged.values() {
        table.push_str(&format!(
            "{:<12} {:<8} {:>5} {:>10.4} {:>9.4} {:>9.4} {:>12.4}\n",
            row.instance, row.solver, row.runs, row.mean_ratio, row.min_ratio, row.max_ratio, row.mean_seconds
        ));
    }

    let instances: BTreeSet<&String> = merged.keys().map(|(i, _)| i).collect();
    let mut speedups = String::new();
    for inst in instances {
        let acf = merged.get(&(inst.clone(), Solver::QceAcf));
        let qaoa = merged.get(&(inst.clone(), Solver::Qaoa));
        if let (Some(acf), Some(qaoa)) = (acf, qaoa) {
            let r = if acf.mean_seconds > 0.0 {
                qaoa.mean_seconds / acf.mean_seconds
            } else {
                f64::INFINITY
            };
            speedups.push_str(&format!("{inst:<12} qaoa/qce-acf time = {r:.2}x\n"));
        }
    }
    if !speedups.is_empty() {
        table.push('\n');
        table.push_str(&speedups);
    }
    ComparisonReport { table, warnings }
}

/// Generated stand-ins for fixed-size benchmark families, named `<vars>.<k>`.
pub fn instance_family(
    count: usize,
    num_elements: usize,
    num_partitions: usize,
    base_seed: u64,
) -> Result<Vec<(String, Instance)>> {
    (1..=count)
        .map(|k| {
            let inst = generate_instance(num_elements, num_partitions, base_seed + k as u64)?;
            Ok((format!("{num_partitions}.{k}"), inst))
        })
        .collect()
}

/// Elements per family in the default suite.
pub const SUITE_10_ELEMENTS: usize = 6;
pub const SUITE_14_ELEMENTS: usize = 8;

/// Seven 10-variable and three 14-variable instances.
pub fn default_suite() -> Result<Vec<(String, Instance)>> {
    let mut suite = instance_family(7, SUITE_10_ELEMENTS, 10, 1000)?;
    suite.extend(instance_family(3, SUITE_14_ELEMENTS, 14, 1400)?);
    Ok(suite)
}

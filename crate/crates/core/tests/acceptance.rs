//! End-to-end acceptance checks. Runs as a plain binary so each criterion prints
//! one PASS/FAIL line; the process exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use qce_core::genome::random_gate;
use qce_core::harness::{
    default_suite, run_bench, run_solver, write_detail_csv, BenchPlan, RunResult, SolveSettings,
    Solver, SolverTrace,
};
use qce_core::problem::build_qubo;
use qce_core::qce::{cost_acf, cost_dcf_exact, cost_dcf_sampled};
use qce_core::simcore::{run_circuit, sample};
use qce_core::{
    brute_force, generate_instance, Bitstring, CircuitGenome, Gate, GateKind, Instance,
    MeasurementRecord, NoiseModel, Partition, PenaltyPolicy, QuboModel, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = (bool, String);

fn main() {
    let mut ctx = Context::new();
    let criteria: [(&str, fn(&mut Context) -> Outcome); 10] = [
        ("oracle correctness", oracle_correctness),
        ("cost-function algebra", cost_algebra),
        ("simulator fidelity", simulator_fidelity),
        ("dcf consistency", dcf_consistency),
        ("acf convergence", acf_convergence),
        ("dcf stagnation contrast", stagnation_contrast),
        ("qaoa baseline parity", baseline_parity),
        ("noise robustness", noise_robustness),
        ("depth profile", depth_profile),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (ok, detail) = check(&mut ctx);
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<24} {}  ({detail}; {:.1}s)",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

/// Suite runs shared between criteria.
struct Context {
    ten: Vec<(String, Instance)>,
    fourteen: Vec<(String, Instance)>,
    acf: Option<Vec<RunResult>>,
    dcf: Option<Vec<RunResult>>,
    acf14: Option<Vec<(RunResult, SolverTrace)>>,
}

impl Context {
    fn new() -> Self {
        let (ten, fourteen) = default_suite()
            .unwrap()
            .into_iter()
            .partition(|(_, inst)| inst.num_partitions() == 10);
        Self {
            ten,
            fourteen,
            acf: None,
            dcf: None,
            acf14: None,
        }
    }

    fn acf(&mut self) -> &[RunResult] {
        if self.acf.is_none() {
            self.acf = Some(suite_run(&self.ten, Solver::QceAcf, None));
        }
        self.acf.as_deref().unwrap()
    }

    fn dcf(&mut self) -> &[RunResult] {
        if self.dcf.is_none() {
            self.dcf = Some(suite_run(&self.ten, Solver::QceDcf, None));
        }
        self.dcf.as_deref().unwrap()
    }
}

/// QCE runs are bounded by the generation budget alone.
fn settings(noise: Option<NoiseModel>) -> SolveSettings {
    SolveSettings {
        shots: 1024,
        max_generations: 2000,
        stall_window: 2000,
        noise,
        ..SolveSettings::default()
    }
}

fn suite_run(instances: &[(String, Instance)], solver: Solver, noise: Option<NoiseModel>) -> Vec<RunResult> {
    let plan = BenchPlan {
        instances: instances.to_vec(),
        solvers: vec![solver],
        repetitions: 1,
        base_seed: 0,
        jobs: 1,
        settings: settings(noise),
    };
    run_bench(&plan).unwrap()
}

fn solved(rows: &[RunResult]) -> usize {
    rows.iter().filter(|r| r.is_ok() && r.ratio == 1.0).count()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Detail CSV with the timing column removed.
fn untimed_csv(rows: &[RunResult]) -> String {
    let mut buf = Vec::new();
    write_detail_csv(&mut buf, rows).unwrap();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(buf.as_slice());
    let mut out = String::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let wall = rec.len() - 1;
        let fields: Vec<&str> = rec.iter().take(wall).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn t1_model() -> QuboModel {
    let inst: Instance = include_str!("../../../fixtures/t1.json").parse().unwrap();
    build_qubo(&inst, &PenaltyPolicy::Default).unwrap()
}

fn record(pairs: &[(&str, u64)]) -> MeasurementRecord {
    let counts: BTreeMap<Bitstring, u64> = pairs.iter().map(|(s, c)| (s.parse().unwrap(), *c)).collect();
    MeasurementRecord::from_counts(counts).unwrap()
}

// Criterion 1 ---------------------------------------------------------------

/// Cheapest exact cover by recursive search over uncovered elements.
/// Ties are broken by the smallest selection bitstring.
fn enumerate_covers(inst: &Instance) -> Option<(Bitstring, f64)> {
    fn recurse(
        inst: &Instance,
        covered: &mut [bool],
        chosen: &mut Vec<bool>,
        cost: f64,
        best: &mut Option<(Bitstring, f64)>,
    ) {
        let Some(next) = covered.iter().position(|c| !c) else {
            let candidate = Bitstring::new(chosen.clone());
            let better = match best {
                None => true,
                Some((b, c)) => cost < *c || (cost == *c && candidate < *b),
            };
            if better {
                *best = Some((candidate, cost));
            }
            return;
        };
        for (p, part) in inst.partitions().iter().enumerate() {
            if chosen[p] || !part.covers.contains(&next) || part.covers.iter().any(|&e| covered[e]) {
                continue;
            }
            chosen[p] = true;
            part.covers.iter().for_each(|&e| covered[e] = true);
            recurse(inst, covered, chosen, cost + part.weight, best);
            part.covers.iter().for_each(|&e| covered[e] = false);
            chosen[p] = false;
        }
    }
    let mut best = None;
    recurse(
        inst,
        &mut vec![false; inst.num_elements()],
        &mut vec![false; inst.num_partitions()],
        0.0,
        &mut best,
    );
    best
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let elements = rng.gen_range(1..=6);
    if rng.gen_bool(0.5) {
        let partitions = rng.gen_range(elements..=12);
        return generate_instance(elements, partitions, rng.gen()).unwrap();
    }
    let partitions = rng.gen_range(1..=12);
    // Unplanted instances: some have no exact cover at all.
    let parts = (0..partitions)
        .map(|_| {
            let mut covers: Vec<usize> = (0..elements).filter(|_| rng.gen_bool(0.4)).collect();
            if covers.is_empty() {
                covers.push(rng.gen_range(0..elements));
            }
            Partition {
                weight: rng.gen_range(0..=9) as f64,
                covers,
            }
        })
        .collect();
    Instance::new(elements, parts, None).unwrap()
}

fn oracle_correctness(_: &mut Context) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut agree, mut infeasible) = (0, 0);
    for _ in 0..50 {
        let inst = random_instance(&mut rng);
        let model = build_qubo(&inst, &PenaltyPolicy::Default).unwrap();
        let oracle = brute_force(&model).unwrap().best_feasible;
        let reference = enumerate_covers(&inst);
        infeasible += reference.is_none() as usize;
        agree += (oracle == reference) as usize;
    }
    let secs = started.elapsed().as_secs_f64();
    (
        agree == 50 && secs < 10.0,
        format!("{agree}/50 agree, {infeasible} without exact cover, {secs:.2}s"),
    )
}

// Criterion 2 ---------------------------------------------------------------

fn cost_algebra(_: &mut Context) -> Outcome {
    let model = t1_model();
    let mixed = record(&[("001", 3), ("110", 2), ("101", 3)]);
    let full = cost_dcf_sampled(&mixed, &model).unwrap().value;
    let feasible = cost_acf(&mixed, &model).unwrap().value;
    let violating = cost_acf(&record(&[("101", 5), ("000", 3)]), &model).unwrap().value;
    (
        full == 8.75 && feasible == 4.4 && violating == 20.0,
        format!("full average {full}, feasible-only {feasible}, violations minus mode {violating}"),
    )
}

// Criterion 3 ---------------------------------------------------------------

fn simulator_fidelity(_: &mut Context) -> Outcome {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut state = StateVector::zero(n);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let before = state.norm_sqr();
        state.apply(&random_gate(n, &mut rng)).unwrap();
        worst = worst.max((state.norm_sqr() - before).abs());
    }

    let circuit = [
        Gate::ry(0, 1.1),
        Gate::two(GateKind::Cry, 0, 1, 2.0),
        Gate::rx(2, 0.7),
        Gate::two(GateKind::Rxx, 1, 2, 0.9),
        Gate::rz(0, 0.4),
        Gate::two(GateKind::Crx, 2, 0, 1.3),
    ];
    let psi = run_circuit(&circuit, 3).unwrap();
    let shots = 100_000u64;
    let rec = sample(&psi, shots, 11).unwrap();
    let probs = psi.probabilities();
    let stat: f64 = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let expected = p * shots as f64;
            let observed = rec.count(&Bitstring::from_index(k, 3)) as f64;
            (observed - expected).powi(2) / expected
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
    (
        worst <= 1e-9 && p_value > 0.001,
        format!("max norm drift {worst:.1e}, chi-square {stat:.2} (p = {p_value:.3})"),
    )
}

// Criterion 4 ---------------------------------------------------------------

fn dcf_consistency(_: &mut Context) -> Outcome {
    let inst = generate_instance(4, 6, 77).unwrap();
    let model = build_qubo(&inst, &PenaltyPolicy::Default).unwrap();
    let h = model.to_ising();
    let n = model.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shots = 100_000u64;
    let mut within = 0;
    let mut worst_z = 0.0f64;
    for g in 0..20u64 {
        let gates = (0..rng.gen_range(1..=12)).map(|_| random_gate(n, &mut rng)).collect();
        let genome = CircuitGenome::new(n, gates).unwrap();
        let exact = cost_dcf_exact(&genome, &h).unwrap().value;
        let psi = run_circuit(genome.gates(), n).unwrap();
        let rec = sample(&psi, shots, 1000 + g).unwrap();
        let sampled = cost_dcf_sampled(&rec, &model).unwrap().value;

        let second: f64 = rec
            .counts()
            .iter()
            .map(|(x, &c)| c as f64 * model.cost(x).unwrap().powi(2))
            .sum::<f64>()
            / shots as f64;
        let sigma = (second - sampled * sampled).max(0.0).sqrt() / (shots as f64).sqrt();
        let gap = (sampled - exact).abs();
        // A deterministic outcome has zero spread; allow for rounding only.
        if gap <= 3.0 * sigma || gap <= 1e-9 * exact.abs().max(1.0) {
            within += 1;
        }
        if sigma > 0.0 {
            worst_z = worst_z.max(gap / sigma);
        }
    }
    (within == 20, format!("{within}/20 within 3 sigma, worst {worst_z:.2} sigma"))
}

// Criterion 5 ---------------------------------------------------------------

fn acf_convergence(ctx: &mut Context) -> Outcome {
    let started = Instant::now();
    let rows = ctx.acf();
    let secs = started.elapsed().as_secs_f64();
    let hits = solved(rows);
    (
        hits >= 6 && secs < 300.0,
        format!("ratio 1.0 on {hits}/7, suite {secs:.1}s"),
    )
}

// Criterion 6 ---------------------------------------------------------------

fn stagnation_contrast(ctx: &mut Context) -> Outcome {
    let acf = ctx.acf().to_vec();
    let dcf = ctx.dcf().to_vec();
    let acf_ratio = mean(acf.iter().map(|r| r.ratio));
    let dcf_ratio = mean(dcf.iter().map(|r| r.ratio));
    let converged_gens = |rows: &[RunResult]| {
        mean(rows.iter().filter(|r| r.ratio == 1.0).map(|r| r.generations_or_evals as f64))
    };
    let (acf_gens, dcf_gens) = (converged_gens(&acf), converged_gens(&dcf));
    let ok = dcf_ratio < acf_ratio || dcf_gens >= 2.0 * acf_gens;
    (
        ok,
        format!(
            "mean ratio dcf {dcf_ratio:.3} vs acf {acf_ratio:.3}; generations to optimum dcf {dcf_gens:.0} vs acf {acf_gens:.0}"
        ),
    )
}

// Criterion 7 ---------------------------------------------------------------

fn fourteen_runs(ctx: &mut Context, solver: Solver) -> Vec<(RunResult, SolverTrace)> {
    let s = settings(None);
    ctx.fourteen
        .iter()
        .flat_map(|(id, inst)| (0..3).map(move |seed| (id, inst, seed)))
        .map(|(id, inst, seed)| run_solver(id, inst, solver, &s, seed).unwrap())
        .collect()
}

fn baseline_parity(ctx: &mut Context) -> Outcome {
    let qaoa = suite_run(&ctx.ten, Solver::Qaoa, None);
    let hits = solved(&qaoa);

    let acf14 = fourteen_runs(ctx, Solver::QceAcf);
    let qaoa14 = fourteen_runs(ctx, Solver::Qaoa);
    let acf_secs = mean(acf14.iter().map(|(r, _)| r.wall_seconds));
    let qaoa_secs = mean(qaoa14.iter().map(|(r, _)| r.wall_seconds));
    ctx.acf14 = Some(acf14);
    (
        hits >= 5 && acf_secs < qaoa_secs,
        format!(
            "qaoa ratio 1.0 on {hits}/7; 14-variable mean time acf {acf_secs:.2}s vs qaoa {qaoa_secs:.2}s"
        ),
    )
}

// Criterion 8 ---------------------------------------------------------------

fn noise_robustness(ctx: &mut Context) -> Outcome {
    let noisy = suite_run(&ctx.ten, Solver::QceAcf, Some(NoiseModel::new(0.01, 0.02).unwrap()));
    let hits = solved(&noisy);
    let silent = suite_run(&ctx.ten, Solver::QceAcf, Some(NoiseModel::new(0.0, 0.0).unwrap()));
    let same = untimed_csv(&silent) == untimed_csv(ctx.acf());
    (
        hits >= 5 && same,
        format!(
            "noisy ratio 1.0 on {hits}/7; zero-noise rerun {}",
            if same { "identical" } else { "differs" }
        ),
    )
}

// Criterion 9 ---------------------------------------------------------------

fn depth_profile(ctx: &mut Context) -> Outcome {
    if ctx.acf14.is_none() {
        ctx.acf14 = Some(fourteen_runs(ctx, Solver::QceAcf));
    }
    let runs = ctx.acf14.as_ref().unwrap();
    let mut converged = 0;
    let mut deepest = 0;
    let mut logged = true;
    for (r, trace) in runs {
        let SolverTrace::Generations(logs) = trace else {
            logged = false;
            continue;
        };
        logged &= logs.len() as u64 == r.generations_or_evals
            && logs.iter().enumerate().all(|(i, l)| l.generation == i as u64 + 1);
        if r.ratio == 1.0 {
            converged += 1;
            deepest = deepest.max(r.final_depth);
        }
    }
    (
        converged > 0 && deepest < 50 && logged,
        format!(
            "{converged}/{} runs converged, deepest final circuit {deepest}, per-generation log {}",
            runs.len(),
            if logged { "complete" } else { "incomplete" }
        ),
    )
}

// Criterion 10 --------------------------------------------------------------

fn determinism(ctx: &mut Context) -> Outcome {
    let rerun = suite_run(&ctx.ten, Solver::QceAcf, None);
    let same = untimed_csv(&rerun) == untimed_csv(ctx.acf());
    (
        same,
        format!("rerun detail csv {}", if same { "byte-identical" } else { "differs" }),
    )
}

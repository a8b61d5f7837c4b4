use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use qce_core::harness::{
    compare_summaries, default_suite, oracle_optimum, read_summary_csv, run_bench, run_solver,
    summarize, write_detail_csv, write_summary_csv, BenchPlan, RunResult, SolveSettings, Solver,
};
use qce_core::problem::load_instance;
use qce_core::{generate_instance, Instance, NoiseModel, PenaltyPolicy};

/// Quantum circuit evolution and QAOA on set partitioning problems.
#[derive(Parser, Debug)]
#[command(name = "qce", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance with a planted exact cover
    Generate(GenerateArgs),
    /// Run one solver on one instance
    Solve(SolveArgs),
    /// Run repeated solver runs over a set of instances
    Bench(BenchArgs),
    /// Merge summary CSVs into one comparison table
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    elements: usize,
    #[arg(long)]
    partitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the brute-force optimum
    #[arg(long)]
    solve_oracle: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    solver: Solver,
    #[arg(long)]
    instance: PathBuf,
    /// Directory for run.csv and trace.csv
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Solvers to run, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [Solver::QceAcf, Solver::Qaoa])]
    solver: Vec<Solver>,
    /// Instance files; the built-in suite is used when none are given
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Directory for summary.csv and detail.csv
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    repetitions: u64,
    /// First repetition seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Summary CSV files
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct SettingsArgs {
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    max_generations: Option<u64>,
    #[arg(long)]
    stall_window: Option<u64>,
    #[arg(long)]
    offspring: Option<usize>,
    /// Keep the parent in the selection pool
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    elitist: bool,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Two-qubit depolarizing and readout flip probabilities
    #[arg(long, value_name = "P,Q", value_parser = parse_noise)]
    noise: Option<NoiseModel>,
    /// Uniform penalty weight for every element
    #[arg(long, value_name = "RHO")]
    penalty: Option<f64>,
    /// Optimum used for the ratio instead of brute force
    #[arg(long, value_name = "X")]
    optimum: Option<f64>,
}

impl SettingsArgs {
    fn to_settings(&self) -> SolveSettings {
        let mut s = SolveSettings::default();
        if let Some(v) = self.shots {
            s.shots = v;
        }
        if let Some(v) = self.max_generations {
            s.max_generations = v;
        }
        if let Some(v) = self.stall_window {
            s.stall_window = v;
        }
        if let Some(v) = self.offspring {
            s.offspring = v;
        }
        if let Some(v) = self.layers {
            s.layers = v;
        }
        if let Some(v) = self.max_evals {
            s.max_evals = v;
        }
        if let Some(v) = self.restarts {
            s.restarts = v;
        }
        if let Some(rho) = self.penalty {
            s.penalty = PenaltyPolicy::Uniform(rho);
        }
        s.elitist = self.elitist;
        s.noise = self.noise;
        s.optimum = self.optimum;
        s
    }
}

fn parse_noise(s: &str) -> std::result::Result<NoiseModel, String> {
    let (p, q) = s.split_once(',').ok_or("expected P,Q")?;
    let p = p.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let q = q.trim().parse::<f64>().map_err(|e| e.to_string())?;
    NoiseModel::new(p, q).map_err(|e| e.to_string())
}

fn read_instance(path: &Path) -> Result<Instance> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_instance(file).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let inst = generate_instance(args.elements, args.partitions, args.seed)?;
    let doc = inst.to_json();
    match &args.out {
        Some(path) => fs::write(path, doc + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{doc}"),
    }
    if args.solve_oracle {
        let opt = oracle_optimum(&inst, &SolveSettings::default())?;
        eprintln!("optimum {opt}");
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<bool> {
    let inst = read_instance(&args.instance)?;
    let settings = args.settings.to_settings();
    let id = instance_id(&args.instance);
    let (result, trace) = match run_solver(&id, &inst, args.solver, &settings, args.seed) {
        Ok((r, t)) => (r, Some(t)),
        Err(e) => (RunResult::failed(&id, args.solver, args.seed, &e), None),
    };
    let rows = [result];
    write_detail_csv(io::stdout().lock(), &rows)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_detail_csv(create(&dir.join("run.csv"))?, &rows)?;
        if let Some(trace) = trace {
            trace.write_csv(create(&dir.join("trace.csv"))?)?;
        }
    }
    if !rows[0].is_ok() {
        eprintln!("{}", rows[0].status);
    }
    Ok(rows[0].is_ok())
}

fn bench(args: &BenchArgs) -> Result<bool> {
    let instances = if args.instance.is_empty() {
        default_suite()?
    } else {
        args.instance
            .iter()
            .map(|p| Ok((instance_id(p), read_instance(p)?)))
            .collect::<Result<Vec<_>>>()?
    };
    let plan = BenchPlan {
        instances,
        solvers: args.solver.clone(),
        repetitions: args.repetitions,
        base_seed: args.seed,
        jobs: args.jobs,
        settings: args.settings.to_settings(),
    };
    let rows = run_bench(&plan)?;
    let summary = summarize(&rows);

    fs::create_dir_all(&args.out)?;
    write_detail_csv(create(&args.out.join("detail.csv"))?, &rows)?;
    write_summary_csv(create(&args.out.join("summary.csv"))?, &summary)?;
    print!("{}", compare_summaries(&[summary]).table);

    let failed: Vec<_> = rows.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        eprintln!("{} {} seed {}: {}", r.instance, r.solver, r.seed, r.status);
    }
    Ok(failed.is_empty())
}

fn report(args: &ReportArgs) -> Result<()> {
    let summaries = args
        .summaries
        .iter()
        .map(|p| {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(read_summary_csv(file)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = compare_summaries(&summaries);
    print!("{}", report.table);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => {
            if a.repetitions == 0 {
                bail!("--repetitions must be at least 1");
            }
            bench(a)
        }
        Command::Report(a) => report(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

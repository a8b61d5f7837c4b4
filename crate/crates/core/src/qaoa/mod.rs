//! QAOA baseline: alternating cost and mixer layers whose angles are tuned by a
//! derivative-free simplex search on the sampled cost average.

mod nelder_mead;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

pub use nelder_mead::{minimize, NelderMeadOptions, NelderMeadResult};

use crate::error::{Error, Result};
use crate::genome::CircuitGenome;
use crate::problem::{Bitstring, IsingHamiltonian, QuboModel};
use crate::qce::{cost_dcf_sampled, CostReport};
use crate::rng;
use crate::simcore::{exact_expectation, run_circuit, sample, sample_noisy, Gate, NoiseModel};

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::InvalidArgument(format!(
                "need equally many gammas and betas (>= 1), got {} and {}",
                gammas.len(),
                betas.len()
            )));
        }
        Ok(Self { gammas, betas })
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    fn from_slice(x: &[f64]) -> Self {
        let p = x.len() / 2;
        Self {
            gammas: x[..p].to_vec(),
            betas: x[p..].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QaoaConfig {
    pub layers: usize,
    pub shots: u64,
    /// Objective evaluations shared across all restarts.
    pub max_evals: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub noise: Option<NoiseModel>,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            layers: 1,
            shots: 1024,
            max_evals: 1000,
            restarts: 3,
            rng_seed: 0,
            noise: None,
        }
    }
}

/// Uniform superposition via `RY(pi/2)` on every qubit, then per layer
/// `RZ(2 gamma h_i)`, `RZZ(2 gamma J_pq)` and `RX(2 beta)`.
pub fn build_ansatz(h: &IsingHamiltonian, params: &QaoaParams) -> CircuitGenome {
    let n = h.num_qubits();
    let mut gates: Vec<Gate> = (0..n).map(|q| Gate::ry(q, FRAC_PI_2)).collect();
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        for (q, &hq) in h.h().iter().enumerate() {
            if hq != 0.0 {
                gates.push(Gate::rz(q, 2.0 * gamma * hq));
            }
        }
        for (&(p, q), &j) in h.j() {
            if j != 0.0 {
                gates.push(Gate::rzz(p, q, 2.0 * gamma * j));
            }
        }
        gates.extend((0..n).map(|q| Gate::rx(q, 2.0 * beta)));
    }
    CircuitGenome::new(n, gates).expect("ansatz gates are in range")
}

/// Sampled cost average of the ansatz at `params`, measured with `seed`.
pub fn objective(
    h: &IsingHamiltonian,
    model: &QuboModel,
    params: &QaoaParams,
    config: &QaoaConfig,
    seed: u64,
) -> Result<CostReport> {
    let circuit = build_ansatz(h, params);
    let n = circuit.num_qubits();
    let record = match &config.noise {
        Some(noise) => sample_noisy(circuit.gates(), n, config.shots, noise, seed)?,
        None => sample(&run_circuit(circuit.gates(), n)?, config.shots, seed)?,
    };
    cost_dcf_sampled(&record, model)
}

/// Noiseless expectation of the cost Hamiltonian at `params`.
pub fn exact_objective(h: &IsingHamiltonian, params: &QaoaParams) -> Result<f64> {
    let circuit = build_ansatz(h, params);
    exact_expectation(&run_circuit(circuit.gates(), circuit.num_qubits())?, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalLog {
    pub eval_index: usize,
    pub params: QaoaParams,
    pub objective: f64,
    pub best_feasible_so_far: Option<(Bitstring, f64)>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct QaoaResult {
    pub best_params: QaoaParams,
    pub best_value: f64,
    pub best_feasible: Option<(Bitstring, f64)>,
    pub evals_used: usize,
    pub logs: Vec<EvalLog>,
    /// Depth of the ansatz, which does not depend on the angles.
    pub circuit_depth: usize,
}

/// One objective evaluation inside a restart.
struct Evaluation {
    params: QaoaParams,
    report: CostReport,
    elapsed_seconds: f64,
}

/// Nelder–Mead from `restarts` uniform random starts. The `max_evals` budget is
/// split evenly across restarts, which run in parallel; logs are merged in
/// restart order. Exhausting the budget is not an error.
pub fn optimize(h: &IsingHamiltonian, model: &QuboModel, config: &QaoaConfig) -> Result<QaoaResult> {
    if config.layers == 0 || config.shots == 0 || config.max_evals == 0 || config.restarts == 0 {
        return Err(Error::InvalidArgument(
            "layers, shots, max_evals and restarts must be positive".into(),
        ));
    }
    let started = Instant::now();
    let p = config.layers;
    let (base, extra) = (config.max_evals / config.restarts, config.max_evals % config.restarts);

    let run_restart = |restart: usize| -> Result<Vec<Evaluation>> {
        let share = base + usize::from(restart < extra);
        let mut evals = Vec::with_capacity(share);
        if share == 0 {
            return Ok(evals);
        }
        let mut rng = rng::stream(config.rng_seed, &[rng::tag::QAOA_START, restart as u64]);
        let x0: Vec<f64> = (0..2 * p).map(|_| rng.gen_range(0.0..PI)).collect();
        let options = NelderMeadOptions {
            max_evals: share,
            ..NelderMeadOptions::default()
        };
        let mut failure = None;
        minimize(
            |x: &[f64]| {
                if failure.is_some() {
                    return f64::INFINITY;
                }
                let params = QaoaParams::from_slice(x);
                let path = [rng::tag::QAOA_EVAL, restart as u64, evals.len() as u64];
                match objective(h, model, &params, config, rng::derive(config.rng_seed, &path)) {
                    Ok(report) => {
                        let value = report.value;
                        evals.push(Evaluation {
                            params,
                            report,
                            elapsed_seconds: started.elapsed().as_secs_f64(),
                        });
                        value
                    }
                    Err(e) => {
                        failure = Some(e);
                        f64::INFINITY
                    }
                }
            },
            &x0,
            &options,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(evals),
        }
    };
    let restarts = (0..config.restarts)
        .into_par_iter()
        .map(run_restart)
        .collect::<Result<Vec<_>>>()?;

    let mut logs: Vec<EvalLog> = Vec::new();
    let mut best_feasible: Option<(Bitstring, f64)> = None;
    let mut best: Option<(QaoaParams, f64)> = None;
    for e in restarts.into_iter().flatten() {
        if let Some((x, c)) = &e.report.best_feasible_seen {
            if best_feasible.as_ref().is_none_or(|(bx, bc)| c < bc || (c == bc && x < bx)) {
                best_feasible = Some((x.clone(), *c));
            }
        }
        if best.as_ref().is_none_or(|(_, v)| e.report.value < *v) {
            best = Some((e.params.clone(), e.report.value));
        }
        logs.push(EvalLog {
            eval_index: logs.len(),
            params: e.params,
            objective: e.report.value,
            best_feasible_so_far: best_feasible.clone(),
            elapsed_seconds: e.elapsed_seconds,
        });
    }

    let (best_params, best_value) = best.expect("at least one evaluation");
    let circuit_depth = build_ansatz(h, &best_params).depth();
    Ok(QaoaResult {
        best_params,
        best_value,
        best_feasible,
        evals_used: logs.len(),
        logs,
        circuit_depth,
    })
}

/// `eval_index,gamma_1..gamma_p,beta_1..beta_p,objective,best_feasible_cost,cumulative_seconds`
pub fn write_eval_csv<W: Write>(mut out: W, logs: &[EvalLog], layers: usize) -> Result<()> {
    let mut header = vec!["eval_index".to_string()];
    header.extend((1..=layers).map(|i| format!("gamma_{i}")));
    header.extend((1..=layers).map(|i| format!("beta_{i}")));
    header.extend(["objective", "best_feasible_cost", "cumulative_seconds"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for l in logs {
        let mut row = vec![l.eval_index.to_string()];
        row.extend(l.params.gammas.iter().chain(&l.params.betas).map(f64::to_string));
        row.push(l.objective.to_string());
        row.push(
            l.best_feasible_so_far
                .as_ref()
                .map(|(_, c)| c.to_string())
                .unwrap_or_default(),
        );
        row.push(format!("{:.6}", l.elapsed_seconds));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::problem::{build_qubo, generate_instance, PenaltyPolicy};
    use crate::simcore::GateKind;

    fn t1() -> QuboModel {
        let inst = include_str!("../../../../fixtures/t1.json").parse().unwrap();
        build_qubo(&inst, &PenaltyPolicy::Default).unwrap()
    }

    #[test]
    fn zero_hamiltonian_gives_uniform_distribution() {
        let h = IsingHamiltonian::new(3, vec![0.0; 3], BTreeMap::new(), 0.0);
        let params = QaoaParams::new(vec![0.4], vec![0.0]).unwrap();
        let circuit = build_ansatz(&h, &params);
        let probs = run_circuit(circuit.gates(), 3).unwrap().probabilities();
        assert!(probs.iter().all(|p| (p - 0.125).abs() < 1e-12));
    }

    #[test]
    fn ansatz_structure() {
        // C(x) = x0: h0 = -1/2
        let h = IsingHamiltonian::new(1, vec![-0.5], BTreeMap::new(), 0.5);
        let d1 = build_ansatz(&h, &QaoaParams::new(vec![0.1], vec![0.2]).unwrap());
        let d3 = build_ansatz(&h, &QaoaParams::new(vec![0.1; 3], vec![0.2; 3]).unwrap());
        assert_eq!(d1.depth(), 3);
        assert_eq!(d3.depth(), 7);
        assert_eq!(d1.gates()[1], Gate::rz(0, 2.0 * 0.1 * -0.5));
        assert_eq!(d1.gates()[2].kind(), GateKind::Rx);
        assert!(QaoaParams::new(vec![0.1], vec![]).is_err());
    }

    #[test]
    fn zero_params_sample_the_uniform_mean() {
        let model = build_qubo(&generate_instance(4, 8, 2).unwrap(), &PenaltyPolicy::Default).unwrap();
        let h = model.to_ising();
        let n = model.num_vars();
        let costs: Vec<f64> = (0..1usize << n).map(|k| model.cost_of_index(k)).collect();
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / costs.len() as f64;
        let config = QaoaConfig {
            shots: 20_000,
            ..QaoaConfig::default()
        };
        let params = QaoaParams::new(vec![0.0], vec![0.0]).unwrap();
        let r = objective(&h, &model, &params, &config, 3).unwrap();
        let sigma = (var / config.shots as f64).sqrt();
        assert!((r.value - mean).abs() < 3.0 * sigma, "{} vs {mean}", r.value);
        assert_eq!(r, objective(&h, &model, &params, &config, 3).unwrap());
    }

    #[test]
    fn grid_contains_optimal_string() {
        let model = t1();
        let h = model.to_ising();
        let config = QaoaConfig::default();
        let mut found = false;
        for g in 0..16 {
            for b in 0..16 {
                let params = QaoaParams::new(vec![g as f64 * PI / 8.0], vec![b as f64 * PI / 8.0]).unwrap();
                let r = objective(&h, &model, &params, &config, (g * 16 + b) as u64).unwrap();
                let record_best = r.best_feasible_seen.map(|(x, _)| x.to_string());
                found |= record_best.as_deref() == Some("001");
            }
        }
        assert!(found);
    }

    #[test]
    fn exact_objective_periodicity() {
        // Integer weights give integer QUBO coefficients, so h and J are multiples of 1/4
        // and every phase exp(-i 2 gamma h) is 4 pi periodic in gamma; beta is pi periodic
        // up to a global phase.
        let model = build_qubo(&generate_instance(3, 5, 6).unwrap(), &PenaltyPolicy::Default).unwrap();
        let h = model.to_ising();
        let base = QaoaParams::new(vec![0.37], vec![1.1]).unwrap();
        let e = exact_objective(&h, &base).unwrap();
        let shifted_beta = QaoaParams::new(vec![0.37], vec![1.1 + 2.0 * PI]).unwrap();
        let shifted_gamma = QaoaParams::new(vec![0.37 + 4.0 * PI], vec![1.1]).unwrap();
        assert!((exact_objective(&h, &shifted_beta).unwrap() - e).abs() < 1e-8);
        assert!((exact_objective(&h, &shifted_gamma).unwrap() - e).abs() < 1e-8);
    }

    #[test]
    fn single_eval_budget() {
        let model = t1();
        let config = QaoaConfig {
            max_evals: 1,
            ..QaoaConfig::default()
        };
        let r = optimize(&model.to_ising(), &model, &config).unwrap();
        assert_eq!(r.evals_used, 1);
        assert_eq!(r.logs.len(), 1);
        assert_eq!(r.best_params, r.logs[0].params);
    }

    #[test]
    fn optimize_is_deterministic_with_monotone_best() {
        let model = build_qubo(&generate_instance(3, 6, 1).unwrap(), &PenaltyPolicy::Default).unwrap();
        let config = QaoaConfig {
            max_evals: 40,
            rng_seed: 5,
            ..QaoaConfig::default()
        };
        let a = optimize(&model.to_ising(), &model, &config).unwrap();
        let b = optimize(&model.to_ising(), &model, &config).unwrap();
        assert_eq!(a.best_params, b.best_params);
        assert_eq!(a.best_feasible, b.best_feasible);
        assert_eq!(a.evals_used, 40);
        let bests: Vec<f64> = a
            .logs
            .iter()
            .map(|l| l.best_feasible_so_far.as_ref().map_or(f64::INFINITY, |(_, c)| *c))
            .collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));

        let mut buf = Vec::new();
        write_eval_csv(&mut buf, &a.logs, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("eval_index,gamma_1,beta_1,objective,best_feasible_cost,cumulative_seconds\n"));
        assert_eq!(text.lines().count(), 41);
    }
}

//! Evolving circuits and the insert / delete / swap / modify mutations.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::simcore::{Gate, GateKind};

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGenome {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl CircuitGenome {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("genome needs at least one qubit".into()));
        }
        for g in &gates {
            g.validate(num_qubits)?;
        }
        Ok(Self { num_qubits, gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Circuit depth by greedy layering: each gate lands one layer above the
    /// deepest layer among its qubits.
    pub fn depth(&self) -> usize {
        let mut layer = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let l = 1 + g.qubits().iter().map(|&q| layer[q]).max().unwrap_or(0);
            for &q in g.qubits() {
                layer[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    /// Parses the line format written by `Display`: a `qubits N` header followed by
    /// one `kind q0[,q1] theta` line per gate.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::GenomeFormat(String::new()))?;
        let num_qubits = header
            .strip_prefix("qubits ")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::GenomeFormat(header.to_string()))?;
        let gates = lines.map(Gate::from_str).collect::<Result<Vec<_>>>()?;
        Self::new(num_qubits, gates)
    }
}

impl fmt::Display for CircuitGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutationKind {
    Insert,
    Delete,
    Swap,
    Modify,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] = [
        MutationKind::Insert,
        MutationKind::Delete,
        MutationKind::Swap,
        MutationKind::Modify,
    ];
}

/// Reading of the swap mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SwapMode {
    /// Exchange the positions of two existing gates.
    #[default]
    Exchange,
    /// Replace one gate with a freshly drawn random gate.
    Replace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationConfig {
    /// Insert, delete, swap, modify.
    pub probabilities: [f64; 4],
    /// Standard deviation of the angle perturbation, in radians.
    pub modify_sigma: f64,
    pub rng_seed: u64,
    pub swap_mode: SwapMode,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            probabilities: [0.25; 4],
            modify_sigma: 0.1 * TAU,
            rng_seed: 0,
            swap_mode: SwapMode::Exchange,
        }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.probabilities.iter().sum();
        if self.probabilities.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mutation probabilities {:?} must be non-negative and sum to 1",
                self.probabilities
            )));
        }
        if !(self.modify_sigma > 0.0 && self.modify_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "modify sigma {} must be positive",
                self.modify_sigma
            )));
        }
        Ok(())
    }

    fn draw_kind<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> MutationKind {
        let pick = |weights: &[f64; 4], rng: &mut R| {
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            for (kind, &w) in MutationKind::ALL.iter().zip(weights) {
                if u < w {
                    return *kind;
                }
                u -= w;
            }
            // Rounding at the top of the range; fall back to the last weighted kind.
            MutationKind::ALL[weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)]
        };
        let kind = pick(&self.probabilities, rng);
        if kind == MutationKind::Delete && len <= 1 {
            let mut rest = self.probabilities;
            rest[1] = 0.0;
            if rest.iter().sum::<f64>() <= 0.0 {
                return MutationKind::Insert;
            }
            return pick(&rest, rng);
        }
        kind
    }
}

/// Uniform kind, uniform ordered pair of distinct qubits (or single qubit), angle in `[0, 2pi)`.
pub fn random_gate<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Gate {
    let kind = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
    let theta = rng.gen_range(0.0..TAU);
    let a = rng.gen_range(0..num_qubits);
    if kind.arity() == 1 {
        Gate::one(kind, a, theta)
    } else {
        let mut b = rng.gen_range(0..num_qubits - 1);
        if b >= a {
            b += 1;
        }
        Gate::two(kind, a, b, theta)
    }
}

/// A genome holding a single random gate.
pub fn random_initial(num_qubits: usize, rng_seed: u64) -> Result<CircuitGenome> {
    if num_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "evolution needs at least 2 qubits, got {num_qubits}"
        )));
    }
    let mut rng = rng::stream(rng_seed, &[rng::tag::INITIAL]);
    let gate = random_gate(num_qubits, &mut rng);
    CircuitGenome::new(num_qubits, vec![gate])
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Applies exactly one mutation to a copy of `parent`, reporting which one.
pub fn mutate_traced<R: Rng + ?Sized>(
    parent: &CircuitGenome,
    config: &MutationConfig,
    rng: &mut R,
) -> (CircuitGenome, MutationKind) {
    let n = parent.num_qubits;
    let mut gates = parent.gates.clone();
    let kind = config.draw_kind(rng, gates.len());
    match kind {
        MutationKind::Insert => {
            let pos = rng.gen_range(0..=gates.len());
            gates.insert(pos, random_gate(n, rng));
        }
        MutationKind::Delete => {
            let pos = rng.gen_range(0..gates.len());
            gates.remove(pos);
        }
        MutationKind::Swap => match config.swap_mode {
            SwapMode::Exchange if gates.len() >= 2 => {
                let i = rng.gen_range(0..gates.len());
                let mut j = rng.gen_range(0..gates.len() - 1);
                if j >= i {
                    j += 1;
                }
                gates.swap(i, j);
            }
            SwapMode::Exchange => {}
            SwapMode::Replace if !gates.is_empty() => {
                let pos = rng.gen_range(0..gates.len());
                gates[pos] = random_gate(n, rng);
            }
            SwapMode::Replace => gates.push(random_gate(n, rng)),
        },
        MutationKind::Modify => {
            if gates.is_empty() {
                gates.push(random_gate(n, rng));
            } else {
                let pos = rng.gen_range(0..gates.len());
                let normal = Normal::new(0.0, config.modify_sigma).expect("validated sigma");
                gates[pos].theta = wrap_angle(gates[pos].theta + normal.sample(rng));
            }
        }
    }
    (CircuitGenome { num_qubits: n, gates }, kind)
}

pub fn mutate<R: Rng + ?Sized>(parent: &CircuitGenome, config: &MutationConfig, rng: &mut R) -> CircuitGenome {
    mutate_traced(parent, config, rng).0
}

/// `count` independent mutants of `parent`; offspring `i` of `generation` draws
/// from its own stream of `config.rng_seed`.
pub fn spawn_offspring(
    parent: &CircuitGenome,
    count: usize,
    config: &MutationConfig,
    generation: u64,
) -> Vec<CircuitGenome> {
    (0..count as u64)
        .map(|i| {
            let mut rng = rng::stream(config.rng_seed, &[rng::tag::MUTATION, generation, i]);
            mutate(parent, config, &mut rng)
        })
        .collect()
}

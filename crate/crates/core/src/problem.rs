//! Set partitioning instances and their penalty QUBO.
//!
//! An instance selects weighted partitions (columns) so that every element is
//! covered exactly once. The QUBO folds the exact-cover constraints into the
//! objective with one penalty per element:
//!
//! ```text
//! C(x) = sum_p w_p x_p + sum_i rho_i (sum_{p covers i} x_p - 1)^2
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest variable count [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 26;

/// Tests whether qubit `q` is set in basis index `k` of an `n`-qubit register.
///
/// Qubit 0 is the most significant bit, so the rendered bitstring of `k` reads
/// qubit 0 first.
#[inline]
pub(crate) fn bit_of(k: usize, q: usize, n: usize) -> bool {
    (k >> (n - 1 - q)) & 1 == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    #[serde(rename = "cost")]
    pub weight: f64,
    pub covers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_elements: usize,
    partitions: Vec<Partition>,
    known_optimum: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceDocument {
    elements: usize,
    partitions: Vec<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimum: Option<f64>,
}

impl Instance {
    /// Validates and normalises an instance. Cover sets are sorted and deduplicated.
    pub fn new(
        num_elements: usize,
        partitions: Vec<Partition>,
        known_optimum: Option<f64>,
    ) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidInstance("instance has no elements".into()));
        }
        if partitions.is_empty() {
            return Err(Error::InvalidInstance("instance has no partitions".into()));
        }
        let mut normalised = Vec::with_capacity(partitions.len());
        for (p, part) in partitions.into_iter().enumerate() {
            if !(part.weight.is_finite() && part.weight >= 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "partition {p} has invalid cost {}",
                    part.weight
                )));
            }
            let covers: BTreeSet<usize> = part.covers.iter().copied().collect();
            if covers.is_empty() {
                return Err(Error::InvalidInstance(format!("partition {p} covers nothing")));
            }
            if let Some(&bad) = covers.iter().find(|&&i| i >= num_elements) {
                return Err(Error::InvalidInstance(format!(
                    "partition {p} covers element {bad} but the instance has {num_elements} elements"
                )));
            }
            normalised.push(Partition {
                weight: part.weight,
                covers: covers.into_iter().collect(),
            });
        }
        if let Some(opt) = known_optimum {
            if !(opt.is_finite() && opt >= 0.0) {
                return Err(Error::InvalidInstance(format!("invalid optimum {opt}")));
            }
        }
        Ok(Self {
            num_elements,
            partitions: normalised,
            known_optimum,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Number of partitions, which is also the number of qubits downstream.
    pub fn num_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    pub fn with_known_optimum(mut self, optimum: Option<f64>) -> Self {
        self.known_optimum = optimum;
        self
    }

    pub fn to_json(&self) -> String {
        let doc = InstanceDocument {
            elements: self.num_elements,
            partitions: self.partitions.clone(),
            optimum: self.known_optimum,
        };
        serde_json::to_string_pretty(&doc).expect("instance serialises")
    }
}

impl FromStr for Instance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(s)?;
        Instance::new(doc.elements, doc.partitions, doc.optimum)
    }
}

/// Reads an instance document (`{"elements", "partitions": [{"cost", "covers"}], "optimum"?}`).
pub fn load_instance<R: Read>(mut source: R) -> Result<Instance> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    text.parse()
}

/// Generates a random instance with a planted exact cover.
///
/// The element set is split into between 1 and `min(num_elements, num_partitions)`
/// non-empty blocks which become columns; the remaining columns are random filler
/// subsets. Weights are small integers in `1..=10`, so costs are exact in `f64`.
pub fn generate_instance(num_elements: usize, num_partitions: usize, seed: u64) -> Result<Instance> {
    if num_elements == 0 || num_partitions < num_elements {
        return Err(Error::InvalidArgument(format!(
            "need partitions >= elements >= 1, got elements={num_elements} partitions={num_partitions}"
        )));
    }
    let mut rng = rng::stream(seed, &[rng::tag::INSTANCE]);
    let blocks = rng.gen_range(1..=num_elements.min(num_partitions));

    let mut elements: Vec<usize> = (0..num_elements).collect();
    elements.shuffle(&mut rng);
    let mut planted: Vec<Vec<usize>> = vec![Vec::new(); blocks];
    for (slot, &e) in elements.iter().enumerate() {
        let b = if slot < blocks { slot } else { rng.gen_range(0..blocks) };
        planted[b].push(e);
    }

    let max_filler = (num_elements / 2).max(1);
    let mut columns = planted;
    while columns.len() < num_partitions {
        let size = rng.gen_range(1..=max_filler);
        let mut pick: Vec<usize> = (0..num_elements).collect();
        pick.shuffle(&mut rng);
        pick.truncate(size);
        columns.push(pick);
    }
    columns.shuffle(&mut rng);

    let partitions = columns
        .into_iter()
        .map(|covers| Partition {
            weight: rng.gen_range(1..=10) as f64,
            covers,
        })
        .collect();
    Instance::new(num_elements, partitions, None)
}

/// How the per-element penalties `rho_i` are chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PenaltyPolicy {
    /// `rho_i = 1 + sum_p w_p` for every element. Any infeasible string then costs
    /// strictly more than any feasible one.
    #[default]
    Default,
    Uniform(f64),
    PerElement(Vec<f64>),
}

impl PenaltyPolicy {
    fn penalties(&self, instance: &Instance) -> Result<Vec<f64>> {
        let k = instance.num_elements();
        let rho = match self {
            PenaltyPolicy::Default => {
                let total: f64 = instance.partitions().iter().map(|p| p.weight).sum();
                vec![1.0 + total; k]
            }
            PenaltyPolicy::Uniform(r) => vec![*r; k],
            PenaltyPolicy::PerElement(v) => {
                if v.len() != k {
                    return Err(Error::InvalidArgument(format!(
                        "{} penalties given for {k} elements",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if let Some(bad) = rho.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidArgument(format!("penalty {bad} is not positive")));
        }
        Ok(rho)
    }
}

/// A string of decision variables; bit `p` is `x_p`. Ordering is lexicographic
/// with bit 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bitstring(Vec<bool>);

impl Bitstring {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Decodes basis index `k` of an `n`-qubit register.
    pub fn from_index(k: usize, n: usize) -> Self {
        Self((0..n).map(|q| bit_of(k, q, n)).collect())
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, p: usize) -> bool {
        self.0[p]
    }
}

impl From<&[u8]> for Bitstring {
    fn from(bits: &[u8]) -> Self {
        Self(bits.iter().map(|&b| b != 0).collect())
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidArgument(format!("bad bitstring `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Penalty QUBO of a set partitioning instance.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    num_vars: usize,
    weights: Vec<f64>,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    constant: f64,
    penalties: Vec<f64>,
    cover_index: Vec<Vec<usize>>,
    // Flattened copy of `quadratic` for the hot evaluation loops.
    pairs: Vec<(usize, usize, f64)>,
}

/// Expands the penalty objective into linear, quadratic and constant coefficients.
pub fn build_qubo(instance: &Instance, policy: &PenaltyPolicy) -> Result<QuboModel> {
    let n = instance.num_partitions();
    let penalties = policy.penalties(instance)?;

    let mut cover_index = vec![Vec::new(); instance.num_elements()];
    for (p, part) in instance.partitions().iter().enumerate() {
        for &i in &part.covers {
            cover_index[i].push(p);
        }
    }

    let weights: Vec<f64> = instance.partitions().iter().map(|p| p.weight).collect();
    let mut linear = weights.clone();
    let mut quadratic = BTreeMap::new();
    // rho (S - 1)^2 = rho (sum_p x_p + 2 sum_{p<q} x_p x_q - 2 sum_p x_p + 1)
    for (i, covering) in cover_index.iter().enumerate() {
        let rho = penalties[i];
        for (a, &p) in covering.iter().enumerate() {
            linear[p] -= rho;
            for &q in &covering[a + 1..] {
                *quadratic.entry((p, q)).or_insert(0.0) += 2.0 * rho;
            }
        }
    }
    let constant = penalties.iter().sum();
    Ok(QuboModel::from_parts(
        n, weights, linear, quadratic, constant, penalties, cover_index,
    ))
}

impl QuboModel {
    fn from_parts(
        num_vars: usize,
        weights: Vec<f64>,
        linear: Vec<f64>,
        quadratic: BTreeMap<(usize, usize), f64>,
        constant: f64,
        penalties: Vec<f64>,
        cover_index: Vec<Vec<usize>>,
    ) -> Self {
        let pairs = quadratic.iter().map(|(&(p, q), &v)| (p, q, v)).collect();
        Self {
            num_vars,
            weights,
            linear,
            quadratic,
            constant,
            penalties,
            cover_index,
            pairs,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Upper-triangular couplings keyed by `(p, q)` with `p < q`.
    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// For each element, the partitions covering it.
    pub fn cover_index(&self) -> &[Vec<usize>] {
        &self.cover_index
    }

    fn check_len(&self, x: &Bitstring) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::LengthMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `C(x)` from the expanded coefficients.
    pub fn cost(&self, x: &Bitstring) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.cost_unchecked(x.bits()))
    }

    pub(crate) fn cost_unchecked(&self, x: &[bool]) -> f64 {
        let mut c = self.constant;
        for (p, &on) in x.iter().enumerate() {
            if on {
                c += self.linear[p];
            }
        }
        for &(p, q, v) in &self.pairs {
            if x[p] && x[q] {
                c += v;
            }
        }
        c
    }

    /// `C(k)` for basis index `k`, qubit 0 most significant.
    pub(crate) fn cost_of_index(&self, k: usize) -> f64 {
        let n = self.num_vars;
        let mut c = self.constant;
        for p in 0..n {
            if bit_of(k, p, n) {
                c += self.linear[p];
            }
        }
        for &(p, q, v) in &self.pairs {
            if bit_of(k, p, n) && bit_of(k, q, n) {
                c += v;
            }
        }
        c
    }

    /// `C(x)` evaluated in constraint form: weights plus squared violations.
    pub fn penalty_form_cost(&self, x: &Bitstring) -> Result<f64> {
        self.check_len(x)?;
        let objective: f64 = self
            .weights
            .iter()
            .zip(x.bits())
            .filter(|(_, &on)| on)
            .map(|(w, _)| w)
            .sum();
        let penalty: f64 = self
            .violations_unchecked(x.bits())
            .zip(&self.penalties)
            .map(|(v, rho)| rho * (v * v) as f64)
            .sum();
        Ok(objective + penalty)
    }

    /// Per-element signed violation `sum_{p covers i} x_p - 1`.
    pub fn violations(&self, x: &Bitstring) -> Result<Vec<i64>> {
        self.check_len(x)?;
        Ok(self.violations_unchecked(x.bits()).collect())
    }

    fn violations_unchecked<'a>(&'a self, x: &'a [bool]) -> impl Iterator<Item = i64> + 'a {
        self.cover_index
            .iter()
            .map(move |covering| covering.iter().filter(|&&p| x[p]).count() as i64 - 1)
    }

    /// True iff every element is covered exactly once. Runs in
    /// `O(sum_i |cover_index_i|)`.
    pub fn is_feasible(&self, x: &Bitstring) -> Result<bool> {
        self.check_len(x)?;
        Ok(self.is_feasible_unchecked(x.bits()))
    }

    pub(crate) fn is_feasible_unchecked(&self, x: &[bool]) -> bool {
        self.violations_unchecked(x).all(|v| v == 0)
    }

    pub(crate) fn is_feasible_index(&self, k: usize) -> bool {
        let n = self.num_vars;
        self.cover_index
            .iter()
            .all(|covering| covering.iter().filter(|&&p| bit_of(k, p, n)).count() == 1)
    }

    /// Substitutes `x_p = (1 - z_p) / 2`.
    pub fn to_ising(&self) -> IsingHamiltonian {
        let n = self.num_vars;
        let mut offset = self.constant;
        let mut h = vec![0.0; n];
        let mut j = BTreeMap::new();
        for (p, &a) in self.linear.iter().enumerate() {
            offset += a / 2.0;
            h[p] -= a / 2.0;
        }
        for (&(p, q), &b) in &self.quadratic {
            offset += b / 4.0;
            h[p] -= b / 4.0;
            h[q] -= b / 4.0;
            j.insert((p, q), b / 4.0);
        }
        IsingHamiltonian::new(n, h, j, offset)
    }
}

/// Diagonal Hamiltonian `offset + sum_p h_p Z_p + sum_{p<q} J_pq Z_p Z_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingHamiltonian {
    num_qubits: usize,
    h: Vec<f64>,
    j: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl IsingHamiltonian {
    pub fn new(num_qubits: usize, h: Vec<f64>, j: BTreeMap<(usize, usize), f64>, offset: f64) -> Self {
        assert_eq!(h.len(), num_qubits, "one field per qubit");
        assert!(
            j.keys().all(|&(p, q)| p < q && q < num_qubits),
            "couplings must be upper-triangular and in range"
        );
        Self {
            num_qubits,
            h,
            j,
            offset,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn j(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.j
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Energy of a spin configuration, `z_p` in `{+1, -1}`.
    pub fn energy(&self, z: &[i8]) -> f64 {
        let mut e = self.offset;
        for (p, &hp) in self.h.iter().enumerate() {
            e += hp * z[p] as f64;
        }
        for (&(p, q), &v) in &self.j {
            e += v * (z[p] * z[q]) as f64;
        }
        e
    }

    /// Energy of computational basis state `k` (`z_p = 1 - 2 x_p`).
    pub fn energy_of_index(&self, k: usize) -> f64 {
        let n = self.num_qubits;
        let spin = |p: usize| if bit_of(k, p, n) { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for (p, &hp) in self.h.iter().enumerate() {
            e += hp * spin(p);
        }
        for (&(p, q), &v) in &self.j {
            e += v * spin(p) * spin(q);
        }
        e
    }

    /// All `2^n` diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.num_qubits)
            .into_par_iter()
            .map(|k| self.energy_of_index(k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Cheapest feasible string; ties go to the lexicographically smallest.
    pub best_feasible: Option<(Bitstring, f64)>,
    /// Unconstrained minimum of `C`.
    pub global_min_cost: f64,
}

/// Exhaustively scans all `2^N` strings.
pub fn brute_force(model: &QuboModel) -> Result<BruteForceResult> {
    let n = model.num_vars();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyVariables(n));
    }
    // (cost, index) minima; comparing the pair makes the reduction order-free.
    type Best = Option<(f64, usize)>;
    fn keep(a: Best, b: Best) -> Best {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(if (b.0, b.1) < (a.0, a.1) { b } else { a }),
        }
    }
    let (feasible, global) = (0..1usize << n)
        .into_par_iter()
        .with_min_len(1 << 12)
        .fold(
            || (None, None),
            |(f, g): (Best, Best), k| {
                let c = model.cost_of_index(k);
                let f = if model.is_feasible_index(k) { keep(f, Some((c, k))) } else { f };
                (f, keep(g, Some((c, k))))
            },
        )
        .reduce(|| (None, None), |a, b| (keep(a.0, b.0), keep(a.1, b.1)));

    Ok(BruteForceResult {
        best_feasible: feasible.map(|(c, k)| (Bitstring::from_index(k, n), c)),
        global_min_cost: global.map(|(c, _)| c).expect("at least one string"),
    })
}

use num_complex::Complex64;

use super::gate::{Gate, GateKind};
use super::noise::Pauli;
use crate::error::{Error, Result};
use crate::problem::IsingHamiltonian;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn rotation(axis: GateKind, theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
    match axis {
        GateKind::Rx | GateKind::Crx => [[c, -I * s], [-I * s, c]],
        GateKind::Ry | GateKind::Cry => [[c, -s], [s, c]],
        GateKind::Rz | GateKind::Crz => [[c - I * s, ZERO], [ZERO, c + I * s]],
        _ => unreachable!("not a single-axis rotation"),
    }
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Self {
        assert!(num_qubits >= 1 && num_qubits < usize::BITS as usize, "bad qubit count");
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    /// Builds a state from raw amplitudes; the caller is responsible for the norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn stride(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    fn apply_single(&mut self, q: usize, m: &Mat2) {
        let s = self.stride(q);
        for block in self.amplitudes.chunks_exact_mut(2 * s) {
            let (lo, hi) = block.split_at_mut(s);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    fn apply_controlled(&mut self, control: usize, target: usize, m: &Mat2) {
        let cs = self.stride(control);
        let ts = self.stride(target);
        for k in 0..self.amplitudes.len() {
            if k & cs != 0 && k & ts == 0 {
                let (x, y) = (self.amplitudes[k], self.amplitudes[k | ts]);
                self.amplitudes[k] = m[0][0] * x + m[0][1] * y;
                self.amplitudes[k | ts] = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    /// `exp(-i theta/2 P(x)P)` for `P` in {X, Y}: couples |00>,|11> and |01>,|10>.
    fn apply_xx_like(&mut self, a: usize, b: usize, theta: f64, yy: bool) {
        let (s, c) = (theta / 2.0).sin_cos();
        // YY|00> = -|11>, YY|01> = |10>; XX has +1 on both.
        let even = if yy { I * s } else { -I * s };
        let odd = -I * s;
        let (sa, sb) = (self.stride(a), self.stride(b));
        for k in 0..self.amplitudes.len() {
            if k & sa == 0 && k & sb == 0 {
                let (i00, i01, i10, i11) = (k, k | sb, k | sa, k | sa | sb);
                let (a00, a11) = (self.amplitudes[i00], self.amplitudes[i11]);
                self.amplitudes[i00] = c * a00 + even * a11;
                self.amplitudes[i11] = c * a11 + even * a00;
                let (a01, a10) = (self.amplitudes[i01], self.amplitudes[i10]);
                self.amplitudes[i01] = c * a01 + odd * a10;
                self.amplitudes[i10] = c * a10 + odd * a01;
            }
        }
    }

    fn apply_zz(&mut self, a: usize, b: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let same = Complex64::new(c, -s);
        let diff = Complex64::new(c, s);
        let mask = self.stride(a) | self.stride(b);
        for (k, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if (k & mask).count_ones() % 2 == 0 { same } else { diff };
        }
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        let q = gate.qubits();
        match gate.kind() {
            k @ (GateKind::Rx | GateKind::Ry | GateKind::Rz) => {
                self.apply_single(q[0], &rotation(k, gate.theta))
            }
            k @ (GateKind::Crx | GateKind::Cry | GateKind::Crz) => {
                self.apply_controlled(q[0], q[1], &rotation(k, gate.theta))
            }
            GateKind::Rxx => self.apply_xx_like(q[0], q[1], gate.theta, false),
            GateKind::Ryy => self.apply_xx_like(q[0], q[1], gate.theta, true),
            GateKind::Rzz => self.apply_zz(q[0], q[1], gate.theta),
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub(crate) fn apply_pauli(&mut self, q: usize, pauli: Pauli) {
        let m = match pauli {
            Pauli::I => return,
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        self.apply_single(q, &m);
    }
}

/// Applies one gate, consuming and returning the state.
pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// Runs `gates` in order on `|0...0>`.
pub fn run_circuit(gates: &[Gate], num_qubits: usize) -> Result<StateVector> {
    for g in gates {
        g.validate(num_qubits)?;
    }
    let mut state = StateVector::zero(num_qubits);
    for g in gates {
        state.apply_unchecked(g);
    }
    Ok(state)
}

/// `<psi|H|psi>` for a diagonal Ising Hamiltonian.
pub fn exact_expectation(state: &StateVector, h: &IsingHamiltonian) -> Result<f64> {
    if h.num_qubits() != state.num_qubits() {
        return Err(Error::InvalidArgument(format!(
            "{}-qubit Hamiltonian on a {}-qubit state",
            h.num_qubits(),
            state.num_qubits()
        )));
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * h.energy_of_index(k))
        .sum())
}

pub(crate) fn expectation_with_diagonal(state: &StateVector, diagonal: &[f64]) -> f64 {
    debug_assert_eq!(state.amplitudes().len(), diagonal.len());
    state
        .amplitudes()
        .iter()
        .zip(diagonal)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum()
}

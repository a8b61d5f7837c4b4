use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Crx,
    Cry,
    Crz,
    Rxx,
    Ryy,
    Rzz,
}

impl GateKind {
    pub const ALL: [GateKind; 9] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Crx => "crx",
            GateKind::Cry => "cry",
            GateKind::Crz => "crz",
            GateKind::Rxx => "rxx",
            GateKind::Ryy => "ryy",
            GateKind::Rzz => "rzz",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::GenomeFormat(s.to_string()))
    }
}

/// A parameterised rotation. For the controlled kinds the first qubit is the control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    pub theta: f64,
}

impl Gate {
    pub fn one(kind: GateKind, q: usize, theta: f64) -> Self {
        assert_eq!(kind.arity(), 1, "{kind} takes two qubits");
        Self {
            kind,
            qubits: [q, q],
            theta,
        }
    }

    pub fn two(kind: GateKind, a: usize, b: usize, theta: f64) -> Self {
        assert_eq!(kind.arity(), 2, "{kind} takes one qubit");
        Self {
            kind,
            qubits: [a, b],
            theta,
        }
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rx, q, theta)
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Ry, q, theta)
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rz, q, theta)
    }

    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Rzz, a, b, theta)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for &q in self.qubits() {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits,
                });
            }
        }
        if self.is_two_qubit() && self.qubits[0] == self.qubits[1] {
            return Err(Error::DuplicateQubit(self.to_string()));
        }
        Ok(())
    }
}

/// `kind q0[,q1] theta`, e.g. `crx 0,3 1.5707963267948966`.
impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.qubits() {
            [q] => write!(f, "{} {} {}", self.kind, q, self.theta),
            [a, b] => write!(f, "{} {},{} {}", self.kind, a, b, self.theta),
            _ => unreachable!(),
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::GenomeFormat(line.to_string());
        let mut fields = line.split_whitespace();
        let (Some(kind), Some(qubits), Some(theta), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad());
        };
        let kind: GateKind = kind.parse().map_err(|_| bad())?;
        let theta: f64 = theta.parse().map_err(|_| bad())?;
        let qubits = qubits
            .split(',')
            .map(|q| q.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        match (kind.arity(), qubits.as_slice()) {
            (1, &[q]) => Ok(Gate::one(kind, q, theta)),
            (2, &[a, b]) => Ok(Gate::two(kind, a, b, theta)),
            _ => Err(bad()),
        }
    }
}

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use super::{bit, c, CMatrix, MAX_QUBITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> CMatrix {
        let (a, b, cc, d) = match self {
            Pauli::I => (c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)),
            Pauli::X => (c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
            Pauli::Y => (c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
            Pauli::Z => (c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
        };
        CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
    }
}

/// Parse a Pauli string such as `"XXYZ"`.
pub(crate) fn parse_pauli_string(s: &str) -> Option<Vec<Pauli>> {
    if s.is_empty() {
        return None;
    }
    s.chars().map(Pauli::from_char).collect()
}

/// Dense matrix of a tensor product of Paulis, first factor most significant.
pub(crate) fn pauli_string_matrix(ops: &[Pauli]) -> CMatrix {
    ops.iter()
        .fold(CMatrix::identity(1, 1), |acc, p| acc.kronecker(&p.matrix()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<Pauli>,
}

impl PauliTerm {
    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    pub fn label(&self) -> String {
        self.ops.iter().map(|p| p.as_char()).collect()
    }

    /// `P|j> = phase(j) |j ^ flip_mask>`; returns the flip mask.
    pub(crate) fn flip_mask(&self) -> usize {
        let n = self.ops.len();
        self.ops.iter().enumerate().fold(0, |m, (q, p)| match p {
            Pauli::X | Pauli::Y => m | 1 << (n - 1 - q),
            _ => m,
        })
    }

    pub(crate) fn phase(&self, j: usize) -> Complex64 {
        let n = self.ops.len();
        let mut ph = c(1., 0.);
        for (q, p) in self.ops.iter().enumerate() {
            let b = bit(j, q, n);
            match p {
                Pauli::I | Pauli::X => {}
                Pauli::Y => ph *= if b == 0 { c(0., 1.) } else { c(0., -1.) },
                Pauli::Z => {
                    if b == 1 {
                        ph = -ph
                    }
                }
            }
        }
        ph
    }
}

/// Hamiltonian as a real-weighted sum of Pauli strings.
///
/// Duplicate strings are merged when the sum is built, so every string
/// appears once. Terms keep first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new<S: AsRef<str>>(terms: impl IntoIterator<Item = (f64, S)>) -> Result<Self> {
        let mut n_qubits = None;
        let mut merged: Vec<PauliTerm> = Vec::new();
        for (coeff, s) in terms {
            let s = s.as_ref();
            let ops = parse_pauli_string(s)
                .ok_or_else(|| Error::usage(format!("invalid Pauli string {s:?}")))?;
            if !coeff.is_finite() {
                return Err(Error::domain(format!("non-finite coefficient for {s}")));
            }
            match n_qubits {
                None => n_qubits = Some(ops.len()),
                Some(n) if n != ops.len() => {
                    return Err(Error::usage(format!(
                        "Pauli string {s} has length {}, expected {n}",
                        ops.len()
                    )))
                }
                _ => {}
            }
            match merged.iter_mut().find(|t| t.ops == ops) {
                Some(t) => t.coeff += coeff,
                None => merged.push(PauliTerm { coeff, ops }),
            }
        }
        let n_qubits = n_qubits.ok_or_else(|| Error::usage("empty Pauli sum"))?;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{n_qubits} qubits exceeds the limit of {MAX_QUBITS}"
            )));
        }
        Ok(Self {
            n_qubits,
            terms: merged,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= factor;
        }
        out
    }

    /// Dense Hermitian matrix of the operator.
    pub fn to_matrix(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for t in &self.terms {
            let x = t.flip_mask();
            for j in 0..dim {
                m[(j ^ x, j)] += t.phase(j) * t.coeff;
            }
        }
        m
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    /// One term per line: `<coefficient> <pauli_string>`. `#` starts a comment.
    fn from_str(s: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut tok = line.split_whitespace();
            let (Some(coeff), Some(label), None) = (tok.next(), tok.next(), tok.next()) else {
                return Err(parse_err(format!(
                    "expected `<coefficient> <pauli_string>`, got {line:?}"
                )));
            };
            let coeff: f64 = coeff
                .parse()
                .map_err(|_| parse_err(format!("bad coefficient {coeff:?}")))?;
            if !coeff.is_finite() {
                return Err(parse_err(format!("non-finite coefficient {coeff}")));
            }
            if parse_pauli_string(label).is_none() {
                return Err(parse_err(format!("bad Pauli string {label:?}")));
            }
            if let Some((_, first)) = raw.first() {
                let first: &String = first;
                if first.len() != label.len() {
                    return Err(parse_err(format!(
                        "Pauli string {label} has length {}, expected {}",
                        label.len(),
                        first.len()
                    )));
                }
            }
            raw.push((coeff, label.to_string()));
        }
        PauliSum::new(raw)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{} {}", t.coeff, t.label())?;
        }
        Ok(())
    }
}

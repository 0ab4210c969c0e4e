use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pauli::{parse_pauli_string, pauli_string_matrix, Pauli};
use super::{c, CMatrix};
use crate::error::{Error, Result};

pub const SINGLE_QUBIT_NS: f64 = 50.0;
pub const MULTI_QUBIT_NS: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Rx,
    Ry,
    Rz,
    Cx,
    /// `exp(-i theta/2 P)` for a Pauli string `P`.
    Prot,
}

impl GateKind {
    pub const ALL: [GateKind; 9] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Prot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Prot => "prot",
        }
    }

    pub fn is_parametrized(self) -> bool {
        matches!(
            self,
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Prot
        )
    }

    /// Fixed arity, or `None` for Pauli rotations whose arity is the string length.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::Cx => Some(2),
            GateKind::Prot => None,
            _ => Some(1),
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown gate kind {s:?}")))
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param_index: Option<usize>,
    /// Only for [`GateKind::Prot`]; one Pauli per entry of `qubits`.
    pub pauli: Option<Vec<Pauli>>,
    pub duration_ns: f64,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, param_index: Option<usize>) -> Result<Self> {
        if kind == GateKind::Prot {
            return Err(Error::usage("use Gate::prot for Pauli rotations"));
        }
        Self::build(kind, qubits, param_index, None)
    }

    pub fn prot(pauli: &str, qubits: Vec<usize>, param_index: usize) -> Result<Self> {
        let ops = parse_pauli_string(pauli)
            .ok_or_else(|| Error::usage(format!("invalid Pauli string {pauli:?}")))?;
        Self::build(GateKind::Prot, qubits, Some(param_index), Some(ops))
    }

    fn build(
        kind: GateKind,
        qubits: Vec<usize>,
        param_index: Option<usize>,
        pauli: Option<Vec<Pauli>>,
    ) -> Result<Self> {
        let arity = match (kind.arity(), &pauli) {
            (Some(a), _) => a,
            (None, Some(p)) => p.len(),
            (None, None) => return Err(Error::usage("prot gate needs a Pauli string")),
        };
        if qubits.len() != arity {
            return Err(Error::usage(format!(
                "{kind} acts on {arity} qubit(s), got {}",
                qubits.len()
            )));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(Error::usage(format!("{kind} repeats qubit {q}")));
            }
        }
        if kind.is_parametrized() != param_index.is_some() {
            return Err(Error::usage(if kind.is_parametrized() {
                format!("{kind} needs a parameter index")
            } else {
                format!("{kind} takes no parameter")
            }));
        }
        // Pauli rotations are multi-qubit pulses even on a single qubit.
        let duration_ns = if arity == 1 && kind != GateKind::Prot {
            SINGLE_QUBIT_NS
        } else {
            MULTI_QUBIT_NS
        };
        Ok(Self {
            kind,
            qubits,
            param_index,
            pauli,
            duration_ns,
        })
    }

    pub fn with_duration(mut self, duration_ns: f64) -> Self {
        self.duration_ns = duration_ns;
        self
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    /// Local unitary on `self.qubits`; `theta` is ignored for fixed gates.
    pub fn unitary(&self, theta: f64) -> CMatrix {
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let m2 = |v: [num_complex::Complex64; 4]| CMatrix::from_row_slice(2, 2, &v);
        let zero = c(0., 0.);
        let one = c(1., 0.);
        match self.kind {
            GateKind::X => Pauli::X.matrix(),
            GateKind::Y => Pauli::Y.matrix(),
            GateKind::Z => Pauli::Z.matrix(),
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                m2([c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
            }
            GateKind::Rx => m2([c(cs, 0.), c(0., -sn), c(0., -sn), c(cs, 0.)]),
            GateKind::Ry => m2([c(cs, 0.), c(-sn, 0.), c(sn, 0.), c(cs, 0.)]),
            GateKind::Rz => m2([c(cs, -sn), zero, zero, c(cs, sn)]),
            GateKind::Cx => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = one;
                m[(1, 1)] = one;
                m[(2, 3)] = one;
                m[(3, 2)] = one;
                m
            }
            GateKind::Prot => {
                let p = pauli_string_matrix(self.pauli.as_deref().unwrap_or(&[]));
                let d = p.nrows();
                CMatrix::identity(d, d) * c(cs, 0.) - p * c(0., sn)
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some(p) = &self.pauli {
            write!(f, " {}", p.iter().map(|x| x.as_char()).collect::<String>())?;
        }
        if let Some(i) = self.param_index {
            write!(f, " t{i}")?;
        }
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_unitary(u: &CMatrix) -> bool {
        let d = u.nrows();
        (u.adjoint() * u - CMatrix::identity(d, d)).norm() < 1e-13
    }

    #[test]
    fn all_gates_are_unitary() {
        let gates = [
            Gate::new(GateKind::H, vec![0], None).unwrap(),
            Gate::new(GateKind::Rx, vec![0], Some(0)).unwrap(),
            Gate::new(GateKind::Ry, vec![0], Some(0)).unwrap(),
            Gate::new(GateKind::Rz, vec![0], Some(0)).unwrap(),
            Gate::new(GateKind::Cx, vec![0, 1], None).unwrap(),
            Gate::prot("XYZ", vec![0, 1, 2], 0).unwrap(),
        ];
        for g in &gates {
            assert!(is_unitary(&g.unitary(0.731)), "{g}");
        }
    }

    #[test]
    fn rotations_match_pauli_rotation_form() {
        for (kind, p) in [
            (GateKind::Rx, "X"),
            (GateKind::Ry, "Y"),
            (GateKind::Rz, "Z"),
        ] {
            let g = Gate::new(kind, vec![0], Some(0)).unwrap();
            let pr = Gate::prot(p, vec![0], 0).unwrap();
            assert!((g.unitary(1.3) - pr.unitary(1.3)).norm() < 1e-14);
        }
    }

    #[test]
    fn validation_and_durations() {
        assert!(Gate::new(GateKind::Cx, vec![0, 0], None).is_err());
        assert!(Gate::new(GateKind::Rx, vec![0], None).is_err());
        assert!(Gate::new(GateKind::X, vec![0], Some(1)).is_err());
        assert!(Gate::prot("XY", vec![0], 0).is_err());
        assert_eq!(
            Gate::new(GateKind::H, vec![0], None).unwrap().duration_ns,
            50.0
        );
        assert_eq!(Gate::prot("XY", vec![0, 1], 0).unwrap().duration_ns, 150.0);
        assert_eq!(Gate::prot("Z", vec![1], 0).unwrap().duration_ns, 150.0);
    }
}

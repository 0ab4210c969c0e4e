use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;

use super::pauli::parse_pauli_string;
use super::{embed, CMatrix, DensityMatrix, Gate, GateKind, NoiseModel, MAX_QUBITS};
use crate::error::{Error, Result};

/// Parametrized gate sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl Circuit {
    /// `n_params` is one more than the largest parameter index; every index
    /// below it must be used by some gate.
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::usage(format!("unsupported qubit count {n_qubits}")));
        }
        for g in &gates {
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::usage(format!(
                    "gate `{g}` uses qubit {q} of a {n_qubits}-qubit register"
                )));
            }
        }
        let n_params = gates
            .iter()
            .filter_map(|g| g.param_index)
            .max()
            .map_or(0, |m| m + 1);
        for i in 0..n_params {
            if !gates.iter().any(|g| g.param_index == Some(i)) {
                return Err(Error::usage(format!("parameter t{i} is never used")));
            }
        }
        Ok(Self {
            n_qubits,
            gates,
            n_params,
        })
    }

    pub fn empty(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new())
    }

    /// Parse a circuit file; the register width is the larger of
    /// `min_qubits` and the highest qubit index used plus one.
    pub fn parse_with_width(text: &str, min_qubits: usize) -> Result<Self> {
        let mut gates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            gates.push(parse_gate_line(line).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?);
        }
        let used = gates
            .iter()
            .flat_map(|g| g.qubits.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        Self::new(used.max(min_qubits).max(1), gates)
    }

    pub fn load(path: impl AsRef<Path>, min_qubits: usize) -> Result<Self> {
        Self::parse_with_width(&std::fs::read_to_string(path)?, min_qubits)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Same gates on a wider register.
    pub fn widened(&self, n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, self.gates.clone())
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::usage(format!(
                "circuit takes {} parameters, got {}",
                self.n_params,
                theta.len()
            )));
        }
        Ok(())
    }

    fn gate_full(&self, g: &Gate, theta: &[f64]) -> CMatrix {
        let angle = g.param_index.map_or(0.0, |i| theta[i]);
        embed(&g.unitary(angle), &g.qubits, self.n_qubits)
    }

    /// Full noiseless unitary `U(theta)`.
    pub fn unitary(&self, theta: &[f64]) -> Result<CMatrix> {
        self.check_params(theta)?;
        let d = 1 << self.n_qubits;
        Ok(self
            .gates
            .iter()
            .fold(CMatrix::identity(d, d), |u, g| self.gate_full(g, theta) * u))
    }

    /// `U(theta) |psi>`.
    pub fn apply_to_state(
        &self,
        psi: &DVector<Complex64>,
        theta: &[f64],
    ) -> Result<DVector<Complex64>> {
        if psi.len() != 1 << self.n_qubits {
            return Err(Error::usage("state vector dimension mismatch"));
        }
        Ok(self.unitary(theta)? * psi)
    }

    /// Conjugate by each gate in order, attaching matching noise channels
    /// after each gate.
    pub fn evolve(
        &self,
        rho0: &DensityMatrix,
        theta: &[f64],
        noise: Option<&NoiseModel>,
    ) -> Result<DensityMatrix> {
        self.check_params(theta)?;
        if rho0.n_qubits() != self.n_qubits {
            return Err(Error::usage(format!(
                "state has {} qubits, circuit {}",
                rho0.n_qubits(),
                self.n_qubits
            )));
        }
        let mut rho = rho0.matrix().clone();
        for g in &self.gates {
            let u = self.gate_full(g, theta);
            rho = &u * rho * u.adjoint();
            if let Some(model) = noise {
                rho = model.apply_after(g, rho, self.n_qubits)?;
            }
        }
        DensityMatrix::from_matrix_unchecked(rho)
    }
}

fn parse_gate_line(line: &str) -> Result<Gate> {
    let mut tokens = line.split_whitespace();
    let kind: GateKind = tokens.next().unwrap_or_default().parse()?;
    let mut qubits = Vec::new();
    let mut param = None;
    let mut pauli: Option<String> = None;
    for tok in tokens {
        if let Some(idx) = tok.strip_prefix('t').filter(|r| !r.is_empty()) {
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::usage(format!("bad parameter token {tok:?}")))?;
            if param.replace(idx).is_some() {
                return Err(Error::usage("more than one parameter index"));
            }
        } else if let Ok(q) = tok.parse::<usize>() {
            qubits.push(q);
        } else if kind == GateKind::Prot && pauli.is_none() && parse_pauli_string(tok).is_some() {
            pauli = Some(tok.to_string());
        } else {
            return Err(Error::usage(format!("unexpected token {tok:?}")));
        }
    }
    if kind == GateKind::Prot {
        let p = pauli.ok_or_else(|| Error::usage("prot needs a Pauli string"))?;
        let idx = param.ok_or_else(|| Error::usage("prot needs a parameter index"))?;
        // Qubits may be omitted: the string then acts on 0..len.
        if qubits.is_empty() {
            qubits = (0..p.len()).collect();
        }
        Gate::prot(&p, qubits, idx)
    } else {
        Gate::new(kind, qubits, param)
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_width(s, 1)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{c, ChannelSpec};

    const TOY: &str = "ry 0 t0\nry 1 t1\ncx 0 1\nprot XY t2\n";

    fn plus() -> DensityMatrix {
        DensityMatrix::from_statevector(&DVector::from_vec(vec![c(1., 0.), c(1., 0.)])).unwrap()
    }

    #[test]
    fn parses_the_file_format() {
        let circ: Circuit = TOY.parse().unwrap();
        assert_eq!(circ.n_qubits(), 2);
        assert_eq!(circ.n_params(), 3);
        assert_eq!(circ.gates()[3].qubits, vec![0, 1]);
        let wide: Circuit = "prot XXYZ t2 0 1 2 3\nrx 0 t0\nrz 3 t1".parse().unwrap();
        assert_eq!(wide.n_qubits(), 4);
        let round: Circuit = circ.to_string().parse().unwrap();
        assert_eq!(round, circ);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = "ry 0 t0\nfoo 1\n".parse::<Circuit>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!("ry 0 t1\n".parse::<Circuit>().is_err(), "t0 unused");
        assert!("cx 0\n".parse::<Circuit>().is_err());
        assert!("rz 0 t0 t1\n".parse::<Circuit>().is_err());
    }

    #[test]
    fn empty_circuit_is_identity() {
        let circ = Circuit::empty(1).unwrap();
        let out = circ.evolve(&plus(), &[], None).unwrap();
        assert_eq!(out.matrix(), plus().matrix());
    }

    #[test]
    fn rz_pi_maps_plus_to_minus() {
        let circ: Circuit = "rz 0 t0".parse().unwrap();
        let out = circ.evolve(&plus(), &[std::f64::consts::PI], None).unwrap();
        let minus =
            DensityMatrix::from_statevector(&DVector::from_vec(vec![c(1., 0.), c(-1., 0.)]))
                .unwrap();
        assert!((out.matrix() - minus.matrix()).norm() < 1e-10);
    }

    #[test]
    fn noise_attaches_after_matching_gate() {
        let circ: Circuit = "rz 0 t0".parse().unwrap();
        let noise =
            NoiseModel::single([GateKind::Rz], ChannelSpec::PhaseDamping { lambda: 0.2 }).unwrap();
        let out = circ.evolve(&plus(), &[0.0], Some(&noise)).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * 0.8f64.sqrt()).abs() < 1e-12);

        let other =
            NoiseModel::single([GateKind::Rx], ChannelSpec::PhaseDamping { lambda: 0.2 }).unwrap();
        let out = circ.evolve(&plus(), &[0.0], Some(&other)).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parameter_length_is_checked() {
        let circ: Circuit = TOY.parse().unwrap();
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(matches!(
            circ.evolve(&rho, &[0.1], None),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn noiseless_evolution_keeps_pure_states_pure() {
        let circ: Circuit = TOY.parse().unwrap();
        let rho = DensityMatrix::basis(2, 1).unwrap();
        let out = circ.evolve(&rho, &[0.3, -1.1, 2.5], None).unwrap();
        assert!((out.purity() - 1.0).abs() < 1e-9);
        out.validate().unwrap();
    }
}

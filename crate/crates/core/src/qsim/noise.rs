use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CMatrix, Gate, GateKind, KrausChannel};
use crate::error::{Error, Result};

/// Parameters of one of the supported decoherence channels. Times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpec {
    PhaseDamping { lambda: f64 },
    Depolarizing { p: f64 },
    ThermalRelaxation { t1_ns: f64, t2_ns: f64 },
}

impl ChannelSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::PhaseDamping { lambda } => KrausChannel::phase_damping(lambda).map(drop),
            ChannelSpec::Depolarizing { p } => KrausChannel::depolarizing(p, 1).map(drop),
            ChannelSpec::ThermalRelaxation { t1_ns, t2_ns } => {
                KrausChannel::thermal_relaxation(1.0, t1_ns, t2_ns).map(drop)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRule {
    pub gates: BTreeSet<GateKind>,
    pub channel: ChannelSpec,
}

/// Channels attached after every gate whose kind matches a rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NoiseRule>", into = "Vec<NoiseRule>")]
pub struct NoiseModel {
    rules: Vec<NoiseRule>,
}

impl TryFrom<Vec<NoiseRule>> for NoiseModel {
    type Error = Error;

    fn try_from(rules: Vec<NoiseRule>) -> Result<Self> {
        NoiseModel::new(rules)
    }
}

impl From<NoiseModel> for Vec<NoiseRule> {
    fn from(m: NoiseModel) -> Self {
        m.rules
    }
}

impl NoiseModel {
    pub fn new(rules: Vec<NoiseRule>) -> Result<Self> {
        for r in &rules {
            r.channel.validate()?;
        }
        Ok(Self { rules })
    }

    pub fn single(gates: impl IntoIterator<Item = GateKind>, channel: ChannelSpec) -> Result<Self> {
        Self::new(vec![NoiseRule {
            gates: gates.into_iter().collect(),
            channel,
        }])
    }

    pub fn rules(&self) -> &[NoiseRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Apply every matching rule's channel on the gate's qubits.
    ///
    /// Phase damping and thermal relaxation act qubit by qubit. Depolarizing
    /// noise acts jointly on one- and two-qubit gates and qubit by qubit on
    /// wider Pauli rotations.
    pub(crate) fn apply_after(
        &self,
        gate: &Gate,
        rho: CMatrix,
        n_qubits: usize,
    ) -> Result<CMatrix> {
        let mut rho = rho;
        for rule in self.rules.iter().filter(|r| r.gates.contains(&gate.kind)) {
            match rule.channel {
                ChannelSpec::PhaseDamping { lambda } => {
                    let ch = KrausChannel::phase_damping(lambda)?;
                    for &q in &gate.qubits {
                        rho = ch.apply_to(&rho, &[q], n_qubits);
                    }
                }
                ChannelSpec::Depolarizing { p } => {
                    if gate.arity() <= 2 {
                        let ch = KrausChannel::depolarizing(p, gate.arity())?;
                        rho = ch.apply_to(&rho, &gate.qubits, n_qubits);
                    } else {
                        let ch = KrausChannel::depolarizing(p, 1)?;
                        for &q in &gate.qubits {
                            rho = ch.apply_to(&rho, &[q], n_qubits);
                        }
                    }
                }
                ChannelSpec::ThermalRelaxation { t1_ns, t2_ns } => {
                    let ch = KrausChannel::thermal_relaxation(gate.duration_ns, t1_ns, t2_ns)?;
                    for &q in &gate.qubits {
                        rho = ch.apply_to(&rho, &[q], n_qubits);
                    }
                }
            }
        }
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let json = r#"[{"gates":["rz"],"channel":{"type":"phase_damping","lambda":0.05}},
                       {"gates":["cx","x"],"channel":{"type":"thermal_relaxation","t1_ns":90000,"t2_ns":70000}}]"#;
        let m: NoiseModel = serde_json::from_str(json).unwrap();
        assert_eq!(m.rules().len(), 2);
        let back: NoiseModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);

        let bad = r#"[{"gates":["rz"],"channel":{"type":"depolarizing","p":1.5}}]"#;
        assert!(serde_json::from_str::<NoiseModel>(bad).is_err());
        let bad =
            r#"[{"gates":["rz"],"channel":{"type":"thermal_relaxation","t1_ns":10,"t2_ns":30}}]"#;
        assert!(serde_json::from_str::<NoiseModel>(bad).is_err());
    }
}

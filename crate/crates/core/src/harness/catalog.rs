use serde::{Deserialize, Serialize};

use crate::qsim::{ChannelSpec, EstimatorSpec, GateKind, NoiseModel};

/// Shots per Pauli term used by every decoherence family.
pub const DECOHERENCE_SHOTS: u32 = 6144;

/// A named estimator setting; one row of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub estimator: EstimatorSpec,
}

impl FamilySpec {
    pub fn new(name: impl Into<String>, estimator: EstimatorSpec) -> Self {
        Self {
            name: name.into(),
            estimator,
        }
    }
}

const DEPOLARIZED_GATES: [GateKind; 8] = [
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::Rx,
    GateKind::Ry,
    GateKind::Rz,
    GateKind::Cx,
];

fn noisy(channel: ChannelSpec, gates: &[GateKind]) -> EstimatorSpec {
    let model =
        NoiseModel::single(gates.iter().copied(), channel).expect("catalog channels are valid");
    EstimatorSpec::shots(DECOHERENCE_SHOTS).with_noise(model)
}

/// The 21 estimator families, in reporting order: ideal, shot noise,
/// dephasing, depolarizing, realistic thermal relaxation and short thermal
/// relaxation.
pub fn family_catalog() -> Vec<FamilySpec> {
    let mut out = vec![FamilySpec::new("ideal", EstimatorSpec::exact())];
    for n in [256, 512, 1024, 6144] {
        out.push(FamilySpec::new(format!("SN-{n}"), EstimatorSpec::shots(n)));
    }
    for pct in [1, 5, 10, 20] {
        let lambda = f64::from(pct) / 100.0;
        out.push(FamilySpec::new(
            format!("DP-{pct}%"),
            noisy(ChannelSpec::PhaseDamping { lambda }, &[GateKind::Rz]),
        ));
    }
    for pct in [1, 5, 10, 20] {
        let p = f64::from(pct) / 100.0;
        out.push(FamilySpec::new(
            format!("DEPOL-{pct}%"),
            noisy(ChannelSpec::Depolarizing { p }, &DEPOLARIZED_GATES),
        ));
    }
    for t2_us in [70.0, 80.0, 180.0, 380.0] {
        let t2_ns = t2_us * 1e3;
        out.push(FamilySpec::new(
            format!("T2-{t2_us}us"),
            noisy(
                ChannelSpec::ThermalRelaxation {
                    t1_ns: t2_ns + 20e3,
                    t2_ns,
                },
                &GateKind::ALL,
            ),
        ));
    }
    for t_ns in [50.0, 100.0, 200.0, 300.0] {
        out.push(FamilySpec::new(
            format!("TR-{t_ns}ns"),
            noisy(
                ChannelSpec::ThermalRelaxation {
                    t1_ns: t_ns,
                    t2_ns: t_ns,
                },
                &GateKind::ALL,
            ),
        ));
    }
    out
}

pub fn find_family(name: &str) -> Option<FamilySpec> {
    family_catalog().into_iter().find(|f| f.name == name)
}

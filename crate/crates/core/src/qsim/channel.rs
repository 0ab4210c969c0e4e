//! Kraus-operator channels and their application to density matrices.

use super::pauli::{pauli_string_matrix, Pauli};
use super::{c, embed, CMatrix, DensityMatrix};
use crate::error::{Error, Result};

/// Tolerance on `sum_i E_i^dagger E_i = I`.
pub const TP_TOL: f64 = 1e-10;

/// Completely positive trace-preserving map `rho -> sum_i E_i rho E_i^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
    arity: usize,
}

impl KrausChannel {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let d = first.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::InvalidChannel(format!(
                "operator dimension {d} is not 2^k"
            )));
        }
        if operators.iter().any(|e| e.nrows() != d || e.ncols() != d) {
            return Err(Error::InvalidChannel("operators differ in shape".into()));
        }
        let ch = Self {
            arity: d.trailing_zeros() as usize,
            operators,
        };
        let err = ch.completeness_error();
        if err > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (|sum E^dag E - I| = {err:e})"
            )));
        }
        Ok(ch)
    }

    pub fn identity(arity: usize) -> Self {
        let d = 1 << arity;
        Self {
            operators: vec![CMatrix::identity(d, d)],
            arity,
        }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Frobenius norm of `sum_i E_i^dagger E_i - I`.
    pub fn completeness_error(&self) -> f64 {
        let d = 1 << self.arity;
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
        (sum - CMatrix::identity(d, d)).norm()
    }

    /// Single-qubit dephasing with probability `lambda`.
    pub fn phase_damping(lambda: f64) -> Result<Self> {
        check_probability("lambda", lambda)?;
        let mut e0 = CMatrix::zeros(2, 2);
        e0[(0, 0)] = c(1., 0.);
        e0[(1, 1)] = c((1.0 - lambda).sqrt(), 0.);
        let mut e1 = CMatrix::zeros(2, 2);
        e1[(1, 1)] = c(lambda.sqrt(), 0.);
        Self::new(vec![e0, e1])
    }

    /// Energy relaxation `|1> -> |0>` with probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_probability("gamma", gamma)?;
        let mut e0 = CMatrix::zeros(2, 2);
        e0[(0, 0)] = c(1., 0.);
        e0[(1, 1)] = c((1.0 - gamma).sqrt(), 0.);
        let mut e1 = CMatrix::zeros(2, 2);
        e1[(0, 1)] = c(gamma.sqrt(), 0.);
        Self::new(vec![e0, e1])
    }

    /// `rho -> (1-p) rho + p Tr(rho) I/d` on `arity` qubits, as a Pauli twirl.
    ///
    /// Averaging `P rho P` over all `d^2` Paulis gives `Tr(rho) I/d`, so the
    /// identity gets weight `1 - p (d^2-1)/d^2` and every other Pauli `p/d^2`.
    pub fn depolarizing(p: f64, arity: usize) -> Result<Self> {
        check_probability("p", p)?;
        if !(1..=2).contains(&arity) {
            return Err(Error::domain(format!(
                "depolarizing arity must be 1 or 2, got {arity}"
            )));
        }
        let d2 = (1usize << (2 * arity)) as f64;
        let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let mut ops = Vec::new();
        for idx in 0..(1usize << (2 * arity)) {
            let string: Vec<Pauli> = (0..arity)
                .map(|q| paulis[(idx >> (2 * (arity - 1 - q))) & 3])
                .collect();
            let weight = if idx == 0 {
                1.0 - p * (d2 - 1.0) / d2
            } else {
                p / d2
            };
            if weight > 0.0 {
                ops.push(pauli_string_matrix(&string) * c(weight.sqrt(), 0.));
            }
        }
        Self::new(ops)
    }

    /// Single-qubit T1/T2 relaxation over a gate of length `t_gate`.
    ///
    /// Amplitude damping with `gamma = 1 - exp(-t/T1)` followed by pure
    /// dephasing chosen so coherences decay by exactly `exp(-t/T2)`. Relaxes
    /// towards the ground state. Requires `T2 <= 2 T1`.
    pub fn thermal_relaxation(t_gate: f64, t1: f64, t2: f64) -> Result<Self> {
        for (name, v) in [("t_gate", t_gate), ("T1", t1), ("T2", t2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if t2 > 2.0 * t1 {
            return Err(Error::InvalidChannel(format!(
                "T2 = {t2} exceeds 2 T1 = {}",
                2.0 * t1
            )));
        }
        let gamma = -(-t_gate / t1).exp_m1();
        // sqrt(1 - lambda) = exp(-t/T2 + t/(2 T1)), at most 1 because T2 <= 2 T1.
        let dephase = (-t_gate / t2 + t_gate / (2.0 * t1)).exp().min(1.0);
        let lambda = 1.0 - dephase * dephase;
        let amp = Self::amplitude_damping(gamma)?;
        let pd = Self::phase_damping(lambda.clamp(0.0, 1.0))?;
        Ok(pd.compose_after(&amp))
    }

    /// Channel that applies `self` after `first`; drops vanishing products.
    pub fn compose_after(&self, first: &KrausChannel) -> KrausChannel {
        assert_eq!(
            self.arity, first.arity,
            "composing channels of different arity"
        );
        let mut ops: Vec<CMatrix> = Vec::new();
        for b in &self.operators {
            for a in &first.operators {
                let prod = b * a;
                if prod.norm() > 1e-15 {
                    ops.push(prod);
                }
            }
        }
        KrausChannel {
            operators: ops,
            arity: self.arity,
        }
    }

    /// Apply to a bare matrix; the caller guarantees the shape.
    pub(crate) fn apply_to(&self, rho: &CMatrix, qubits: &[usize], n_qubits: usize) -> CMatrix {
        let d = rho.nrows();
        let mut out = CMatrix::zeros(d, d);
        for e in &self.operators {
            let full =
                if qubits.len() == n_qubits && qubits.iter().enumerate().all(|(i, &q)| i == q) {
                    e.clone()
                } else {
                    embed(e, qubits, n_qubits)
                };
            out += &full * rho * full.adjoint();
        }
        out
    }
}

/// `rho' = sum_i (E_i (x) I) rho (E_i (x) I)^dagger` with the channel on `qubits`.
pub fn apply_channel(
    rho: &DensityMatrix,
    channel: &KrausChannel,
    qubits: &[usize],
) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if qubits.len() != channel.arity() {
        return Err(Error::usage(format!(
            "channel acts on {} qubit(s), {} given",
            channel.arity(),
            qubits.len()
        )));
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::usage(format!(
                "qubit {q} out of range for {n} qubits"
            )));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::usage(format!("qubit {q} listed twice")));
        }
    }
    let mut out = rho.clone();
    *out.matrix_mut() = channel.apply_to(rho.matrix(), qubits, n);
    Ok(out)
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn plus() -> DensityMatrix {
        let psi = DVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        DensityMatrix::from_statevector(&psi).unwrap()
    }

    fn excited() -> DensityMatrix {
        DensityMatrix::basis(1, 1).unwrap()
    }

    #[test]
    fn phase_damping_decays_coherence() {
        let rho = plus();
        let id = apply_channel(&rho, &KrausChannel::phase_damping(0.0).unwrap(), &[0]).unwrap();
        assert!((id.matrix() - rho.matrix()).norm() < 1e-15);

        let full = apply_channel(&rho, &KrausChannel::phase_damping(1.0).unwrap(), &[0]).unwrap();
        assert!(full.matrix()[(0, 1)].norm() < 1e-15);
        assert!((full.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);

        let part = apply_channel(&rho, &KrausChannel::phase_damping(0.2).unwrap(), &[0]).unwrap();
        assert!((part.matrix()[(0, 1)].re - 0.447_213_595_499_958).abs() < 1e-12);
    }

    #[test]
    fn phase_damping_composes_multiplicatively() {
        let (l1, l2) = (0.3, 0.45);
        let twice = apply_channel(
            &apply_channel(&plus(), &KrausChannel::phase_damping(l1).unwrap(), &[0]).unwrap(),
            &KrausChannel::phase_damping(l2).unwrap(),
            &[0],
        )
        .unwrap();
        let expected = 0.5 * ((1.0 - l1) * (1.0 - l2)).sqrt();
        assert!((twice.matrix()[(0, 1)].re - expected).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_closed_form() {
        let rho0 = DensityMatrix::basis(1, 0).unwrap();
        let out = apply_channel(&rho0, &KrausChannel::depolarizing(0.1, 1).unwrap(), &[0]).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.95).abs() < 1e-14);
        assert!((out.matrix()[(1, 1)].re - 0.05).abs() < 1e-14);

        let full = KrausChannel::depolarizing(1.0, 2).unwrap();
        let rho = DensityMatrix::basis(2, 2).unwrap();
        let out = apply_channel(&rho, &full, &[0, 1]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((out.matrix() - mixed.matrix()).norm() < 1e-14);
    }

    #[test]
    fn depolarizing_rejects_bad_parameters() {
        assert!(matches!(
            KrausChannel::depolarizing(1.1, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            KrausChannel::depolarizing(0.1, 3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            KrausChannel::phase_damping(-0.1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn thermal_relaxation_decay_laws() {
        let t1 = 100.0;
        let ch = KrausChannel::thermal_relaxation(t1 * 2f64.ln(), t1, 80.0).unwrap();
        assert!(ch.operators().len() <= 3);
        let out = apply_channel(&excited(), &ch, &[0]).unwrap();
        assert!((out.matrix()[(1, 1)].re - 0.5).abs() < 1e-12);

        let t2 = 70.0;
        let ch = KrausChannel::thermal_relaxation(t2, 90.0, t2).unwrap();
        let out = apply_channel(&plus(), &ch, &[0]).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * (-1f64).exp()).abs() < 1e-12);

        let big = 1e15;
        let ch = KrausChannel::thermal_relaxation(50.0, big, big).unwrap();
        let out = apply_channel(&plus(), &ch, &[0]).unwrap();
        assert!((out.matrix() - plus().matrix()).norm() < 1e-9);
    }

    #[test]
    fn thermal_relaxation_limits() {
        let t = 40.0;
        // T2 = 2 T1: pure amplitude damping.
        let tr = KrausChannel::thermal_relaxation(t, 100.0, 200.0).unwrap();
        let ad = KrausChannel::amplitude_damping(1.0 - (-t / 100.0f64).exp()).unwrap();
        for rho in [plus(), excited()] {
            let a = apply_channel(&rho, &tr, &[0]).unwrap();
            let b = apply_channel(&rho, &ad, &[0]).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-14);
        }
        // T1 -> infinity: pure dephasing.
        let tr = KrausChannel::thermal_relaxation(t, 1e300, 60.0).unwrap();
        let out = apply_channel(&plus(), &tr, &[0]).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * (-t / 60.0f64).exp()).abs() < 1e-14);
        assert!((out.matrix()[(1, 1)].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn thermal_relaxation_rejects_t2_above_twice_t1() {
        assert!(matches!(
            KrausChannel::thermal_relaxation(50.0, 100.0, 201.0),
            Err(Error::InvalidChannel(_))
        ));
        assert!(KrausChannel::thermal_relaxation(0.0, 100.0, 100.0).is_err());
    }

    #[test]
    fn non_trace_preserving_set_is_rejected() {
        let e = CMatrix::identity(2, 2) * c(0.9, 0.);
        assert!(matches!(
            KrausChannel::new(vec![e]),
            Err(Error::InvalidChannel(_))
        ));
    }

    #[test]
    fn arity_mismatch_is_usage_error() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let ch = KrausChannel::depolarizing(0.1, 2).unwrap();
        assert!(matches!(
            apply_channel(&rho, &ch, &[0]),
            Err(Error::Usage(_))
        ));
        let ch = KrausChannel::phase_damping(0.1).unwrap();
        assert!(matches!(
            apply_channel(&rho, &ch, &[2]),
            Err(Error::Usage(_))
        ));
    }
}

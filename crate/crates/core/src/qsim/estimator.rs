use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::pauli::{Pauli, PauliTerm};
use super::{c, kron, CMatrix, DensityMatrix, NoiseModel, PauliSum};
use crate::error::{Error, Result};

/// Imaginary residue of `Tr(rho H)` tolerated before it is treated as an error.
const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    Exact,
    /// Finite sampling with `n_m` shots per Pauli term.
    Shots(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub mode: EstimatorMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

impl EstimatorSpec {
    pub fn exact() -> Self {
        Self {
            mode: EstimatorMode::Exact,
            noise: None,
        }
    }

    pub fn shots(n_m: u32) -> Self {
        Self {
            mode: EstimatorMode::Shots(n_m),
            noise: None,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == EstimatorMode::Shots(0) {
            return Err(Error::domain("shot count must be at least 1"));
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self.mode, EstimatorMode::Shots(_))
    }

    /// Expectation of `h` in `rho` under this estimator's sampling mode.
    pub fn expectation<R: Rng + ?Sized>(
        &self,
        rho: &DensityMatrix,
        h: &PauliSum,
        rng: &mut R,
    ) -> Result<f64> {
        match self.mode {
            EstimatorMode::Exact => expectation_exact(rho, h),
            EstimatorMode::Shots(n) => expectation_shots(rho, h, n, rng),
        }
    }
}

fn check_dims(rho: &DensityMatrix, h: &PauliSum) -> Result<()> {
    if rho.n_qubits() != h.n_qubits() {
        return Err(Error::usage(format!(
            "state has {} qubits, Hamiltonian {}",
            rho.n_qubits(),
            h.n_qubits()
        )));
    }
    Ok(())
}

/// `Tr(rho P)` without building `P`: `P|j> = phase(j)|j ^ x>`.
fn pauli_trace(rho: &CMatrix, term: &PauliTerm) -> num_complex::Complex64 {
    let x = term.flip_mask();
    (0..rho.nrows())
        .map(|j| rho[(j, j ^ x)] * term.phase(j))
        .sum()
}

/// `Tr(rho H)`.
pub fn expectation_exact(rho: &DensityMatrix, h: &PauliSum) -> Result<f64> {
    check_dims(rho, h)?;
    let total: num_complex::Complex64 = h
        .terms()
        .iter()
        .map(|t| pauli_trace(rho.matrix(), t) * t.coeff)
        .sum();
    let scale = h
        .terms()
        .iter()
        .map(|t| t.coeff.abs())
        .sum::<f64>()
        .max(1.0);
    if total.im.abs() > IMAG_TOL * scale {
        return Err(Error::usage(format!(
            "expectation has imaginary part {:e}; state is not Hermitian",
            total.im
        )));
    }
    Ok(total.re)
}

/// Single-qubit change of basis taking the Pauli's eigenbasis to Z.
fn basis_change(p: Pauli) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match p {
        Pauli::I | Pauli::Z => CMatrix::identity(2, 2),
        Pauli::X => CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]),
        // H S^dagger
        Pauli::Y => CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(0., -s), c(s, 0.), c(0., s)]),
    }
}

/// Probability of the +1 eigenvalue when measuring `term` on `rho`.
fn plus_probability(rho: &CMatrix, term: &PauliTerm) -> f64 {
    let n = term.ops.len();
    let v = term.ops.iter().fold(CMatrix::identity(1, 1), |acc, &p| {
        kron(&acc, &basis_change(p))
    });
    let rotated = &v * rho * v.adjoint();
    let support = term.ops.iter().enumerate().fold(0usize, |m, (q, p)| {
        if *p == Pauli::I {
            m
        } else {
            m | 1 << (n - 1 - q)
        }
    });
    let p_plus: f64 = (0..rotated.nrows())
        .filter(|j| (j & support).count_ones() % 2 == 0)
        .map(|j| rotated[(j, j)].re)
        .sum();
    // Round-off can push certain outcomes a hair past [0, 1].
    if (p_plus - 1.0).abs() < 1e-12 {
        1.0
    } else if p_plus.abs() < 1e-12 {
        0.0
    } else {
        p_plus.clamp(0.0, 1.0)
    }
}

/// Finite-shot estimate of `Tr(rho H)` with `n_m` shots per non-identity term.
///
/// Each term is measured in its own eigenbasis; the count of +1 outcomes is
/// drawn from the binomial law implied by the rotated diagonal, which is the
/// same distribution as summing `n_m` individual parity outcomes.
pub fn expectation_shots<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    h: &PauliSum,
    n_m: u32,
    rng: &mut R,
) -> Result<f64> {
    check_dims(rho, h)?;
    if n_m == 0 {
        return Err(Error::domain("shot count must be at least 1"));
    }
    let mut total = 0.0;
    for t in h.terms() {
        if t.is_identity() {
            total += t.coeff;
            continue;
        }
        let p_plus = plus_probability(rho.matrix(), t);
        let plus = Binomial::new(u64::from(n_m), p_plus)
            .map_err(|e| Error::domain(format!("binomial sampler: {e}")))?
            .sample(rng) as f64;
        let n = f64::from(n_m);
        total += t.coeff * (2.0 * plus - n) / n;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::pauli::pauli_string_matrix;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rho(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let d = 1 << n;
        let a = CMatrix::from_fn(d, d, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::from_matrix(m / tr).unwrap()
    }

    #[test]
    fn basic_values() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let z = PauliSum::new([(1.0, "Z")]).unwrap();
        let x = PauliSum::new([(1.0, "X")]).unwrap();
        assert_eq!(expectation_exact(&zero, &z).unwrap(), 1.0);
        assert_eq!(expectation_exact(&zero, &x).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 7, 256] {
            assert_eq!(expectation_shots(&zero, &z, n, &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = PauliSum::new([(0.5, "ZZ"), (0.25, "XI"), (-0.7, "YX")]).unwrap();
        for _ in 0..10 {
            let rho = random_rho(2, &mut rng);
            let mut dense = CMatrix::zeros(4, 4);
            for t in h.terms() {
                dense += pauli_string_matrix(&t.ops) * c(t.coeff, 0.);
            }
            let expected = (rho.matrix() * dense).trace().re;
            assert!((expectation_exact(&rho, &h).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn plus_probability_agrees_with_exact_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_rho(3, &mut rng);
        for label in ["XYZ", "IYI", "ZIX", "YYY"] {
            let term = PauliTerm {
                coeff: 1.0,
                ops: crate::qsim::pauli::parse_pauli_string(label).unwrap(),
            };
            let exact = pauli_trace(rho.matrix(), &term).re;
            let p = plus_probability(rho.matrix(), &term);
            assert!((2.0 * p - 1.0 - exact).abs() < 1e-12, "{label}");
        }
    }

    #[test]
    fn shot_estimator_is_seed_deterministic() {
        let psi = DVector::from_vec(vec![c(0.6, 0.), c(0., 0.8)]);
        let rho = DensityMatrix::from_statevector(&psi).unwrap();
        let h = PauliSum::new([(1.0, "X"), (0.3, "Y"), (2.0, "I")]).unwrap();
        let a = expectation_shots(&rho, &h, 512, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = expectation_shots(&rho, &h, 512, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_and_zero_shots() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let z = PauliSum::new([(1.0, "Z")]).unwrap();
        assert!(matches!(expectation_exact(&rho, &z), Err(Error::Usage(_))));
        let zz = PauliSum::new([(1.0, "ZZ")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(expectation_shots(&rho, &zz, 0, &mut rng).is_err());
    }
}

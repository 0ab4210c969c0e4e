//! State-averaged ensemble cost over two orthonormal initial states.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{
    expectation_exact, CMatrix, Circuit, DensityMatrix, EstimatorSpec, PauliSum, MAX_QUBITS,
};

/// Two lowest eigenvalues of a Hamiltonian and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePair {
    pub e0: f64,
    pub e1: f64,
    pub e_sa: f64,
}

impl ReferencePair {
    pub fn new(e0: f64, e1: f64) -> Self {
        let (e0, e1) = if e0 <= e1 { (e0, e1) } else { (e1, e0) };
        Self {
            e0,
            e1,
            e_sa: e0 + e1,
        }
    }
}

/// Everything needed to evaluate the ensemble cost for one family.
#[derive(Debug, Clone)]
pub struct EnsembleContext {
    hamiltonian: PauliSum,
    ansatz: Circuit,
    phi_a: usize,
    phi_b: usize,
    estimator: EstimatorSpec,
}

impl EnsembleContext {
    /// The ansatz is widened to the Hamiltonian's register if it is narrower.
    pub fn new(
        hamiltonian: PauliSum,
        ansatz: Circuit,
        phi_a: usize,
        phi_b: usize,
        estimator: EstimatorSpec,
    ) -> Result<Self> {
        let n = hamiltonian.n_qubits();
        let ansatz = match ansatz.n_qubits() {
            m if m == n => ansatz,
            m if m < n => ansatz.widened(n)?,
            m => {
                return Err(Error::usage(format!(
                    "ansatz uses {m} qubits but the Hamiltonian has {n}"
                )))
            }
        };
        if phi_a == phi_b {
            return Err(Error::usage(
                "initial states must be orthogonal (phi_a == phi_b)",
            ));
        }
        let dim = hamiltonian.dim();
        if phi_a >= dim || phi_b >= dim {
            return Err(Error::usage(format!(
                "basis indices ({phi_a}, {phi_b}) out of range for dimension {dim}"
            )));
        }
        estimator.validate()?;
        Ok(Self {
            hamiltonian,
            ansatz,
            phi_a,
            phi_b,
            estimator,
        })
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn ansatz(&self) -> &Circuit {
        &self.ansatz
    }

    pub fn estimator(&self) -> &EstimatorSpec {
        &self.estimator
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    pub fn with_estimator(&self, estimator: EstimatorSpec) -> Result<Self> {
        estimator.validate()?;
        Ok(Self {
            estimator,
            ..self.clone()
        })
    }

    fn prepare(&self, index: usize, theta: &[f64]) -> Result<DensityMatrix> {
        let rho0 = DensityMatrix::basis(self.hamiltonian.n_qubits(), index)?;
        self.ansatz
            .evolve(&rho0, theta, self.estimator.noise.as_ref())
    }

    /// `<Psi_A|H|Psi_A> + <Psi_B|H|Psi_B>` under the configured estimator.
    pub fn sa_cost<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<f64> {
        let a = self.prepare(self.phi_a, theta)?;
        let b = self.prepare(self.phi_b, theta)?;
        Ok(self.estimator.expectation(&a, &self.hamiltonian, rng)?
            + self.estimator.expectation(&b, &self.hamiltonian, rng)?)
    }

    /// Noise-free, sampling-free ensemble energy at `theta`.
    pub fn sa_cost_exact(&self, theta: &[f64]) -> Result<f64> {
        let a = self.prepare(self.phi_a, theta)?;
        let b = self.prepare(self.phi_b, theta)?;
        Ok(expectation_exact(&a, &self.hamiltonian)? + expectation_exact(&b, &self.hamiltonian)?)
    }

    /// Resolve the optimized ensemble into individual energies `(e0, e1)`.
    ///
    /// Diagonalizes the Hamiltonian restricted to the two prepared states.
    /// Without noise the cross term comes straight from the evolved state
    /// vectors. With noise it is read off four auxiliary preparations
    /// `(|A> + i^k |B>)/sqrt 2` through the same noisy circuit (polarization
    /// identity). Shot sampling is not applied here.
    pub fn resolve_states(&self, theta: &[f64]) -> Result<(f64, f64)> {
        let dim = self.hamiltonian.dim();
        let a = basis_vector(dim, self.phi_a);
        let b = basis_vector(dim, self.phi_b);
        match &self.estimator.noise {
            None => resolve_pair(&self.hamiltonian, &self.ansatz, &a, &b, theta),
            Some(noise) => {
                let h = &self.hamiltonian;
                let energy = |psi: &DVector<Complex64>| -> Result<f64> {
                    let rho = DensityMatrix::from_statevector(psi)?;
                    expectation_exact(&self.ansatz.evolve(&rho, theta, Some(noise))?, h)
                };
                let haa = energy(&a)?;
                let hbb = energy(&b)?;
                let i = Complex64::new(0.0, 1.0);
                let plus = energy(&(&a + &b))?;
                let minus = energy(&(&a - &b))?;
                let plus_i = energy(&(&a + &b * i))?;
                let minus_i = energy(&(&a - &b * i))?;
                let hab = Complex64::new((plus - minus) / 2.0, -(plus_i - minus_i) / 2.0);
                Ok(eig2_hermitian(haa, hbb, hab))
            }
        }
    }
}

fn basis_vector(dim: usize, index: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Eigenvalues of `[[a, c], [c*, b]]`, ascending.
fn eig2_hermitian(a: f64, b: f64, cross: Complex64) -> (f64, f64) {
    let mean = 0.5 * (a + b);
    let radius = (0.25 * (a - b) * (a - b) + cross.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

/// Noiseless resolution for an arbitrary orthonormal pair of initial states.
pub fn resolve_pair(
    h: &PauliSum,
    ansatz: &Circuit,
    psi_a: &DVector<Complex64>,
    psi_b: &DVector<Complex64>,
    theta: &[f64],
) -> Result<(f64, f64)> {
    let u = ansatz.unitary(theta)?;
    if u.nrows() != h.dim() || psi_a.len() != h.dim() || psi_b.len() != h.dim() {
        return Err(Error::usage(
            "dimension mismatch between states, ansatz and Hamiltonian",
        ));
    }
    let hm = h.to_matrix();
    let a = &u * psi_a;
    let b = &u * psi_b;
    let haa = a.dotc(&(&hm * &a)).re;
    let hbb = b.dotc(&(&hm * &b)).re;
    let hab = a.dotc(&(&hm * &b));
    Ok(eig2_hermitian(haa, hbb, hab))
}

/// Two smallest eigenvalues of the dense Hamiltonian.
pub fn reference_energies(h: &PauliSum) -> Result<ReferencePair> {
    if h.n_qubits() > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "dense diagonalization limited to {MAX_QUBITS} qubits"
        )));
    }
    let ev = hermitian_eigenvalues(&h.to_matrix());
    Ok(ReferencePair::new(ev[0], ev[1]))
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Toy problem shipped with the repository: `-ZI - IZ + 0.5 XX`.
pub const TOY_HAMILTONIAN: &str = "-1.0 ZI\n-1.0 IZ\n0.5 XX\n";
/// Three-parameter ansatz for [`TOY_HAMILTONIAN`].
pub const TOY_ANSATZ: &str = "ry 0 t0\nry 1 t1\ncx 0 1\nprot XY t2\n";

/// Toy context with `phi_a = |00>` and `phi_b = |01>`.
pub fn toy_context(estimator: EstimatorSpec) -> EnsembleContext {
    EnsembleContext::new(
        TOY_HAMILTONIAN.parse().expect("toy Hamiltonian parses"),
        TOY_ANSATZ.parse().expect("toy ansatz parses"),
        0,
        1,
        estimator,
    )
    .expect("toy context is valid")
}

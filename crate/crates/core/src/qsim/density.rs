use nalgebra::DVector;
use num_complex::Complex64;

use super::{c, CMatrix, MAX_QUBITS};
use crate::error::{Error, Result};

/// Tolerance used by [`DensityMatrix::validate`] for Hermiticity and trace.
pub const STATE_TOL: f64 = 1e-10;

/// Density matrix of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// `|index><index|`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::usage(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(index, index)] = c(1., 0.);
        Ok(Self { n_qubits, mat })
    }

    /// `|psi><psi|` for a state vector, normalized on the way in.
    pub fn from_statevector(psi: &DVector<Complex64>) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::usage(format!(
                "state vector length {dim} is not 2^n"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_size(n_qubits)?;
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::usage("zero state vector"));
        }
        let psi = psi / c(norm, 0.);
        Ok(Self {
            n_qubits,
            mat: &psi * psi.adjoint(),
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            mat: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.),
        })
    }

    /// Wrap a matrix after checking the density-matrix invariants.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(mat)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Result<Self> {
        let dim = mat.nrows();
        if mat.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::usage(format!(
                "matrix of shape {}x{} is not 2^n square",
                dim,
                mat.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_size(n_qubits)?;
        Ok(Self { n_qubits, mat })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // Tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho.
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.mat + self.mat.adjoint()) * c(0.5, 0.);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::usage(format!(
                "density matrix not Hermitian ({herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - c(1., 0.)).norm() > STATE_TOL {
            return Err(Error::usage(format!("density matrix trace is {tr}")));
        }
        let min_ev = self.eigenvalues()[0];
        if min_ev < -1e-9 {
            return Err(Error::usage(format!(
                "density matrix has negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(())
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::usage("register needs at least one qubit"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n_qubits} qubits exceeds the limit of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_and_mixed_states_are_valid() {
        let rho = DensityMatrix::basis(2, 3).unwrap();
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        mixed.validate().unwrap();
        assert!((mixed.purity() - 0.25).abs() < 1e-15);
        assert!(DensityMatrix::basis(2, 4).is_err());
        assert!(DensityMatrix::basis(9, 0).is_err());
    }

    #[test]
    fn rejects_non_physical_matrices() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(-1.0, 0.0);
        assert!(DensityMatrix::from_matrix(m).is_err());
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0, 0.0);
        m[(0, 1)] = c(0.3, 0.0);
        assert!(DensityMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn statevector_is_normalized() {
        let psi = DVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        let rho = DensityMatrix::from_statevector(&psi).unwrap();
        rho.validate().unwrap();
        assert!((rho.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
    }
}

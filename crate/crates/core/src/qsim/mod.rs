//! Few-qubit density-matrix simulation.
//!
//! Basis ordering: qubit 0 is the most significant bit of a computational
//! basis index, so `|q0 q1 ... q(n-1)>` maps to index `q0 * 2^(n-1) + ...`.
//! Pauli strings follow the same convention: character `i` acts on qubit `i`.

mod channel;
mod circuit;
mod density;
mod estimator;
mod gate;
mod noise;
mod pauli;

pub use channel::{apply_channel, KrausChannel};
pub use circuit::Circuit;
pub use density::DensityMatrix;
pub use estimator::{expectation_exact, expectation_shots, EstimatorMode, EstimatorSpec};
pub use gate::{Gate, GateKind};
pub use noise::{ChannelSpec, NoiseModel, NoiseRule};
pub use pauli::{Pauli, PauliSum, PauliTerm};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 8;

pub(crate) const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn bit(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

/// Lift a `2^k x 2^k` operator acting on `qubits` (first listed qubit is the
/// most significant bit of the local index) to the full `2^n` space.
pub(crate) fn embed(op: &CMatrix, qubits: &[usize], n_qubits: usize) -> CMatrix {
    let dim = 1usize << n_qubits;
    let k = qubits.len();
    debug_assert_eq!(op.nrows(), 1 << k);
    let mut mask = 0usize;
    for &q in qubits {
        mask |= 1 << (n_qubits - 1 - q);
    }
    let local = |i: usize| {
        qubits
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | bit(i, q, n_qubits))
    };
    let mut full = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let lr = local(r);
        for col in 0..dim {
            if r & !mask != col & !mask {
                continue;
            }
            full[(r, col)] = op[(lr, local(col))];
        }
    }
    full
}

pub(crate) fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

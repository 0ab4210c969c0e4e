//! Benchmarking workbench for optimizers on noisy state-averaged VQE costs.
//!
//! * [`qsim`]: density-matrix simulation, Kraus channels and estimators.
//! * [`vqe`]: the two-state ensemble cost, eigenstate resolution and the
//!   dense-diagonalization reference.
//! * [`optim`]: six minimizers behind one interface.
//! * [`stats`]: normality, homogeneity, permutation and rank-based tests.
//! * [`harness`]: the noise-family catalog, experiment runner and run records.

pub mod error;
pub mod harness;
pub mod optim;
pub mod qsim;
pub mod stats;
pub mod vqe;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, FamilySpec, RunRecord};
pub use optim::{minimize, OptResult, OptimizerKind, OptimizerSpec};
pub use qsim::{Circuit, DensityMatrix, EstimatorSpec, KrausChannel, NoiseModel, PauliSum};
pub use stats::{Sample2D, TestResult};
pub use vqe::{EnsembleContext, ReferencePair};

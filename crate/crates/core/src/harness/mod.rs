//! Experiment definition, execution and persistence.

mod catalog;
mod config;
mod record;
mod runner;
mod summary;

pub use catalog::{family_catalog, find_family, FamilySpec, DECOHERENCE_SHOTS};
pub use config::{ExperimentConfig, Theta0Policy};
pub use record::{read_records, write_records, RecordWriter, RunRecord, RECORD_HEADER};
pub use runner::{run_experiment, run_seed, run_single};
pub use summary::{summarize, CellSummary};

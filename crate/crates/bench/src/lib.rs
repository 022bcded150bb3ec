//! Seeded instance generation, table sweeps and CSV output for the `dcopt`
//! solvers, plus the `dcopt` command-line front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod instance;
pub mod output;
pub mod rng;

pub use config::{ConfigError, Dims, ExperimentConfig, SolverChoice};
pub use experiments::{recovery_scatter, run_table, BenchError, RunMetrics, SolverKind, TableRow};
pub use instance::{generate_instance, InstanceData, InstanceSpec};

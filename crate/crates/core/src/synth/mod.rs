//! Synthetic graphs, the Monte Carlo compromise oracle and the validation
//! experiments (backend correlation, sensitivity).

pub mod experiments;
pub mod generator;
pub mod oracle;

pub use experiments::{
    correlation_of, experiment_correlation, experiment_random_bumps, experiment_sensitivity, parameters, partial_derivative, spearman,
    BumpOutcome, BumpReport, BumpTally, CorrelationReport, Parameter, ParameterKind, SensitivityCheck, SensitivityReport,
};
pub use generator::{generate, generate_disjoint_paths, generate_graph, readiness_sweep, DisjointSpec, GenSpec, ResistanceMix};
pub use oracle::{mc_compromise, mc_compromise_with, OracleEstimate, MIN_ORACLE_SAMPLES};

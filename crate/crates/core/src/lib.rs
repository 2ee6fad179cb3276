//! Post-quantum exposure scoring for enterprise cryptographic asset graphs.
//!
//! The crate models assets, certificates, keys, services and their
//! dependencies as a weighted directed graph and computes:
//!
//! * path-based exposure over simple entry→crown-jewel paths ([`exposure::exact`]),
//! * Katz-style all-walks exposure via a block-triangular sparse solve ([`exposure::katz`]),
//! * normalized exposure and the readiness index ([`exposure::normalize`]),
//! * Shapley attribution of exposure across cryptographic domains ([`shapley`]).
//!
//! Snapshot ingestion (deduplication, entity resolution, vulnerability
//! enrichment) lives in [`ingest`]; synthetic graph generation, the Monte Carlo
//! compromise oracle and the validation experiments live in [`synth`].
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to sequential iteration
//! otherwise. Results are bit-identical either way.

pub mod calculators;
pub mod config;
pub mod error;
pub mod exposure;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod par;
pub mod registry;
pub mod report;
pub mod shapley;
pub mod snapshot;
pub mod synth;

pub use config::{Backend, Coalition, DomainId, DomainSet, Mode, ScoringConfig};
pub use error::{CoreError, Result};
pub use graph::{AssetGraph, AssetNode, DependencyEdge, NodeId, NodeKind, Relation, ValidationStatus};
pub use par::Execution;
pub use registry::{ResistanceCategory, ResistanceRegistry};
pub use report::{score, AttributionMethod, ExposureReport};
pub use snapshot::SnapshotDocument;

//! End-to-end scoring: exposure, normalization, readiness index and domain
//! attribution bundled into one serializable report.

use serde::{Deserialize, Serialize};

use crate::config::{Backend, DomainId, Mode, ScoringConfig};
use crate::error::Result;
use crate::exposure::{normalize_exposure, pqri, AttackPath, ExposureModel, ScoringView};
use crate::graph::AssetGraph;
use crate::shapley::{self, AttributionResult, MAX_EXACT_DOMAINS};

pub const REPORT_FORMAT_VERSION: &str = "1";
pub const TOP_PATH_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AttributionMethod {
    Exact,
    MonteCarlo { permutations: Option<usize>, seed: u64 },
    /// Exact up to the domain limit, Monte Carlo with the default budget above it.
    Auto { seed: u64 },
}

impl Default for AttributionMethod {
    fn default() -> Self {
        AttributionMethod::Auto { seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatzDetails {
    pub alpha: f64,
    pub reference_radius: f64,
    pub radius_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureReport {
    pub format_version: String,
    pub mode: Mode,
    pub backend: Backend,
    pub node_count: usize,
    pub edge_count: usize,
    pub domains: Vec<DomainId>,
    /// `E(D)`.
    pub raw_exposure: f64,
    /// `E(S_max)`: full-domain exposure with every `R_v = 0`.
    pub max_exposure: f64,
    /// `Ê(D)`.
    pub normalized_exposure: f64,
    pub pqri: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub katz: Option<KatzDetails>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_count: Option<usize>,
    pub top_paths: Vec<AttackPath>,
    pub attribution: AttributionResult,
    pub warnings: Vec<String>,
}

/// Scores a graph: `E(D)`, `E_max`, `Ê(D)`, PQRI and Shapley attribution.
pub fn score(graph: &AssetGraph, config: &ScoringConfig, method: AttributionMethod) -> Result<ExposureReport> {
    let view = ScoringView::new(graph, config)?;
    let backend = config.backend_for(graph);
    let model = ExposureModel::from_view(&view, config, backend)?;
    let reference = ExposureModel::from_view(&view.with_zero_resistance(), config, backend)?;

    let full = config.domains.full();
    let mut attribution = match method {
        AttributionMethod::Exact => shapley::exact_from_model(&model, &config.domains, config.execution)?,
        AttributionMethod::MonteCarlo { permutations, seed } => shapley::mc_from_model(
            &model,
            &config.domains,
            permutations.unwrap_or_else(|| shapley::default_permutations(config.domains.len())),
            seed,
            config.execution,
        )?,
        AttributionMethod::Auto { seed } if config.domains.len() > MAX_EXACT_DOMAINS => shapley::mc_from_model(
            &model,
            &config.domains,
            shapley::default_permutations(config.domains.len()),
            seed,
            config.execution,
        )?,
        AttributionMethod::Auto { .. } => shapley::exact_from_model(&model, &config.domains, config.execution)?,
    };
    let raw = attribution.full_exposure;
    let max = reference.evaluate(full)?;
    let normalized = normalize_exposure(raw, max);
    attribution.normalized_phi = shapley::normalize_attribution(&attribution.phi, normalized, raw);

    let mut warnings = Vec::new();
    if attribution.baseline_offset() {
        warnings.push(format!(
            "E(empty) = {} is nonzero (an entry node is also a crown jewel); domain attributions sum to E(D) - E(empty)",
            attribution.empty_exposure
        ));
    }
    let (katz, path_count, top_paths) = match &model {
        ExposureModel::Katz(k) => {
            let rho = k.reference_radius();
            if !rho.converged {
                warnings.push("spectral radius power iteration did not converge; used certified upper bound".into());
            }
            (
                Some(KatzDetails {
                    alpha: k.alpha(),
                    reference_radius: rho.radius,
                    radius_converged: rho.converged,
                }),
                None,
                Vec::new(),
            )
        }
        ExposureModel::Exact(p) => (None, Some(p.path_count()), p.top_paths(full, TOP_PATH_LIMIT)),
    };

    Ok(ExposureReport {
        format_version: REPORT_FORMAT_VERSION.into(),
        mode: config.mode,
        backend,
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        domains: config.domains.names().to_vec(),
        raw_exposure: raw,
        max_exposure: max,
        normalized_exposure: normalized,
        pqri: pqri(normalized),
        katz,
        path_count,
        top_paths,
        attribution,
        warnings,
    })
}

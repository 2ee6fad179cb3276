//! Exposure functionals over an [`AssetGraph`].
//!
//! A [`ScoringView`] flattens the graph and a [`ScoringConfig`] into index
//! vectors once; the exact-path and Katz models are then prepared from the
//! view and evaluated for any number of domain coalitions.

pub mod exact;
pub mod katz;
pub mod normalize;
pub mod paths;

use std::collections::BTreeMap;

use crate::config::{Backend, Coalition, ScoringConfig};
use crate::error::Result;
use crate::graph::{AssetGraph, NodeId};

pub use exact::{exposure_exact, PathModel};
pub use katz::{exposure_katz, KatzModel};
pub use normalize::{normalize, normalize_exposure, pqri, readiness_delta, ReadinessDelta};
pub use paths::{enumerate_paths, path_probability, AttackPath};

/// Index-based snapshot of everything the exposure models read.
#[derive(Debug, Clone)]
pub struct ScoringView {
    pub ids: Vec<NodeId>,
    pub resistance: Vec<f64>,
    pub weight: Vec<f64>,
    /// Domain membership of each node as a coalition bitmask.
    pub domain_mask: Vec<u64>,
    /// `I_c` for crown jewels, 0 elsewhere.
    pub impact: Vec<f64>,
    pub is_crown: Vec<bool>,
    pub is_entry: Vec<bool>,
    /// Outgoing `(target, p_uv)` sorted by target. Rejected edges are left
    /// out; parallel edges of different relations collapse to the max `p_uv`.
    pub out: Vec<Vec<(usize, f64)>>,
    index: BTreeMap<NodeId, usize>,
}

impl ScoringView {
    pub fn new(graph: &AssetGraph, config: &ScoringConfig) -> Result<Self> {
        config.validate(graph)?;
        let ids: Vec<NodeId> = graph.nodes().map(|n| n.id.clone()).collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let n = ids.len();
        let mut view = Self {
            resistance: Vec::with_capacity(n),
            weight: Vec::with_capacity(n),
            domain_mask: Vec::with_capacity(n),
            impact: vec![0.0; n],
            is_crown: vec![false; n],
            is_entry: vec![false; n],
            out: vec![Vec::new(); n],
            ids,
            index,
        };
        for node in graph.nodes() {
            view.resistance.push(node.resistance);
            view.weight.push(node.business_weight);
            let mask = config
                .node_domains
                .get(&node.id)
                .map(|ds| config.domains.mask_of(ds))
                .unwrap_or(0);
            view.domain_mask.push(mask);
        }
        for (id, &impact) in &config.crown_jewels {
            let i = view.index[id];
            view.impact[i] = impact;
            view.is_crown[i] = true;
        }
        for id in &config.entry_nodes {
            view.is_entry[view.index[id]] = true;
        }
        let mut collapsed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in graph.edges().iter().filter(|e| e.is_scored()) {
            let key = (view.index[&e.source], view.index[&e.target]);
            let p = collapsed.entry(key).or_insert(0.0);
            *p = p.max(e.exploitability);
        }
        for ((u, v), p) in collapsed {
            view.out[u].push((v, p));
        }
        Ok(view)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// The same view with every `R_v` set to 0.
    pub fn with_zero_resistance(&self) -> Self {
        let mut v = self.clone();
        v.resistance.iter_mut().for_each(|r| *r = 0.0);
        v
    }
}

/// A prepared exposure functional `E(S)`.
#[derive(Debug, Clone)]
pub enum ExposureModel {
    Exact(PathModel),
    Katz(KatzModel),
}

impl ExposureModel {
    /// Prepares the backend selected by `config.mode` for this graph.
    pub fn prepare(graph: &AssetGraph, config: &ScoringConfig) -> Result<Self> {
        let view = ScoringView::new(graph, config)?;
        Self::from_view(&view, config, config.backend_for(graph))
    }

    pub fn from_view(view: &ScoringView, config: &ScoringConfig, backend: Backend) -> Result<Self> {
        Ok(match backend {
            Backend::ExactPaths => ExposureModel::Exact(PathModel::new(view, config)?),
            Backend::Katz => ExposureModel::Katz(KatzModel::new(view, config)?),
        })
    }

    pub fn backend(&self) -> Backend {
        match self {
            ExposureModel::Exact(_) => Backend::ExactPaths,
            ExposureModel::Katz(_) => Backend::Katz,
        }
    }

    pub fn evaluate(&self, coalition: Coalition) -> Result<f64> {
        match self {
            ExposureModel::Exact(m) => Ok(m.evaluate(coalition)),
            ExposureModel::Katz(m) => m.evaluate(coalition),
        }
    }
}

/// `E(S)` with the backend chosen by `config.mode` (auto: exact paths up to
/// `auto_threshold` nodes, Katz above).
pub fn exposure(graph: &AssetGraph, coalition: Coalition, config: &ScoringConfig) -> Result<f64> {
    ExposureModel::prepare(graph, config)?.evaluate(coalition)
}

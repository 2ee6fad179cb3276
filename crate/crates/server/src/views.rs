//! Filtered graph views served by the snapshot route.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use pqready_core::exposure::enumerate_paths;
use pqready_core::graph::{AssetGraph, AssetNode, DependencyEdge, NodeId, NodeKind, Relation, ValidationStatus};
use pqready_core::ScoringConfig;

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    #[default]
    ValidationStatus,
    PqHeatmap,
    ServiceMesh,
    VpnChokepoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    #[serde(flatten)]
    pub node: AssetNode,
    /// `(1 − R_v) · w_v`, heatmap view only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heat: Option<f64>,
    /// Entry→crown paths through this node as an interior hop, chokepoint view only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths_through: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphView {
    pub version: u64,
    pub view: ViewKind,
    pub nodes: Vec<NodeView>,
    pub edges: Vec<DependencyEdge>,
    /// View-specific counters (edges per status, total paths, ...).
    pub summary: BTreeMap<String, f64>,
}

pub fn heat(n: &AssetNode) -> f64 {
    (1.0 - n.resistance) * n.business_weight
}

fn plain(n: &AssetNode) -> NodeView {
    NodeView { node: n.clone(), heat: None, paths_through: None }
}

/// Edges and their endpoints, optionally restricted to one validation status.
pub fn validation_status_view(graph: &AssetGraph, status: Option<ValidationStatus>) -> (Vec<NodeView>, Vec<DependencyEdge>, BTreeMap<String, f64>) {
    let mut summary = BTreeMap::new();
    for e in graph.edges() {
        *summary.entry(e.validation_status.as_str().to_string()).or_insert(0.0) += 1.0;
    }
    let edges: Vec<DependencyEdge> = graph
        .edges()
        .iter()
        .filter(|e| status.is_none_or(|s| e.validation_status == s))
        .cloned()
        .collect();
    let nodes = match status {
        None => graph.nodes().map(plain).collect(),
        Some(_) => endpoints(graph, &edges),
    };
    (nodes, edges, summary)
}

pub fn heatmap_view(graph: &AssetGraph) -> (Vec<NodeView>, Vec<DependencyEdge>, BTreeMap<String, f64>) {
    let nodes: Vec<NodeView> = graph
        .nodes()
        .map(|n| NodeView { heat: Some(heat(n)), ..plain(n) })
        .collect();
    let max = nodes.iter().filter_map(|n| n.heat).fold(0.0, f64::max);
    (nodes, graph.edges().to_vec(), BTreeMap::from([("max_heat".to_string(), max)]))
}

/// Service-to-service connectivity: CONNECTS_TO and DEPENDS_ON edges between
/// services and assets.
pub fn service_mesh_view(graph: &AssetGraph) -> (Vec<NodeView>, Vec<DependencyEdge>, BTreeMap<String, f64>) {
    let mesh_kind = |id: &NodeId| graph.node(id).is_some_and(|n| matches!(n.kind, NodeKind::Service | NodeKind::Asset));
    let edges: Vec<DependencyEdge> = graph
        .edges()
        .iter()
        .filter(|e| matches!(e.relation, Relation::ConnectsTo | Relation::DependsOn) && mesh_kind(&e.source) && mesh_kind(&e.target))
        .cloned()
        .collect();
    let nodes = endpoints(graph, &edges);
    let services = nodes.iter().filter(|n| n.node.kind == NodeKind::Service).count();
    (nodes, edges, BTreeMap::from([("services".to_string(), services as f64)]))
}

/// Nodes whose removal breaks at least `min_paths` entry→crown simple paths,
/// i.e. nodes that sit inside that many paths. Endpoints of a path do not count.
pub fn chokepoint_view(graph: &AssetGraph, config: &ScoringConfig, min_paths: usize) -> Result<(Vec<NodeView>, Vec<DependencyEdge>, BTreeMap<String, f64>), ApiError> {
    let paths = enumerate_paths(graph, config)?;
    let mut through: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for p in &paths {
        if p.nodes.len() > 2 {
            let interior: BTreeSet<&NodeId> = p.nodes[1..p.nodes.len() - 1].iter().collect();
            for id in interior {
                *through.entry(id).or_default() += 1;
            }
        }
    }
    let mut nodes: Vec<NodeView> = through
        .iter()
        .filter(|(_, &c)| c >= min_paths.max(1))
        .filter_map(|(id, &c)| graph.node(id).map(|n| NodeView { paths_through: Some(c), ..plain(n) }))
        .collect();
    nodes.sort_by(|a, b| b.paths_through.cmp(&a.paths_through).then_with(|| a.node.id.cmp(&b.node.id)));
    let chosen: BTreeSet<&NodeId> = nodes.iter().map(|n| &n.node.id).collect();
    let edges = graph
        .edges()
        .iter()
        .filter(|e| chosen.contains(&e.source) || chosen.contains(&e.target))
        .cloned()
        .collect();
    let summary = BTreeMap::from([
        ("paths".to_string(), paths.len() as f64),
        ("min_paths".to_string(), min_paths as f64),
    ]);
    Ok((nodes, edges, summary))
}

fn endpoints(graph: &AssetGraph, edges: &[DependencyEdge]) -> Vec<NodeView> {
    let ids: BTreeSet<&NodeId> = edges.iter().flat_map(|e| [&e.source, &e.target]).collect();
    ids.into_iter().filter_map(|id| graph.node(id)).map(plain).collect()
}

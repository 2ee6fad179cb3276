//! Heterogeneous asset graph: typed nodes, typed weighted edges, adjacency
//! indexes. A graph is immutable once built; changes produce a new graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::DomainId;
use crate::error::{CoreError, Result};

/// Threshold above which a node's impact marks it as a crown jewel.
pub const CROWN_JEWEL_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(CoreError::InvalidInput("node id must be non-empty".into()));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    /// Panics on an empty string; use [`NodeId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        Self::new(s).expect("empty node id")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Asset,
    Ip,
    Certificate,
    Key,
    Service,
    Cve,
    RiskCluster,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Asset => "asset",
            NodeKind::Ip => "ip",
            NodeKind::Certificate => "certificate",
            NodeKind::Key => "key",
            NodeKind::Service => "service",
            NodeKind::Cve => "cve",
            NodeKind::RiskCluster => "risk_cluster",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    Uses,
    ConnectsTo,
    Exposes,
    DependsOn,
    ResolvesTo,
    ProtectedBy,
    Hosts,
    Signs,
    Stores,
    Trusts,
}

impl Relation {
    pub const ALL: [Relation; 10] = [
        Relation::Uses,
        Relation::ConnectsTo,
        Relation::Exposes,
        Relation::DependsOn,
        Relation::ResolvesTo,
        Relation::ProtectedBy,
        Relation::Hosts,
        Relation::Signs,
        Relation::Stores,
        Relation::Trusts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Uses => "USES",
            Relation::ConnectsTo => "CONNECTS_TO",
            Relation::Exposes => "EXPOSES",
            Relation::DependsOn => "DEPENDS_ON",
            Relation::ResolvesTo => "RESOLVES_TO",
            Relation::ProtectedBy => "PROTECTED_BY",
            Relation::Hosts => "HOSTS",
            Relation::Signs => "SIGNS",
            Relation::Stores => "STORES",
            Relation::Trusts => "TRUSTS",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    #[default]
    Unvalidated,
    AutoApproved,
    LlmApproved,
    HumanApproved,
    Rejected,
    UnderReview,
}

impl ValidationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationStatus::Unvalidated => "unvalidated",
            ValidationStatus::AutoApproved => "auto_approved",
            ValidationStatus::LlmApproved => "llm_approved",
            ValidationStatus::HumanApproved => "human_approved",
            ValidationStatus::Rejected => "rejected",
            ValidationStatus::UnderReview => "under_review",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ValidationStatus::Unvalidated,
            ValidationStatus::AutoApproved,
            ValidationStatus::LlmApproved,
            ValidationStatus::HumanApproved,
            ValidationStatus::Rejected,
            ValidationStatus::UnderReview,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetNode {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default)]
    pub label: String,
    /// PQ resistance `R_v`: 0 is fully quantum-vulnerable, 1 is quantum-safe.
    pub resistance: f64,
    /// Business weight `w_v`.
    pub business_weight: f64,
    #[serde(default)]
    pub domains: BTreeSet<DomainId>,
    /// Normalized impact `I_c`; 0 for nodes that are not crown-jewel candidates.
    #[serde(default)]
    pub crown_impact: f64,
    #[serde(default)]
    pub is_entry: bool,
    #[serde(default)]
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl AssetNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self {
            id: NodeId::from(id.into().as_str()),
            kind,
            label: String::new(),
            resistance: 0.0,
            business_weight: 0.0,
            domains: BTreeSet::new(),
            crown_impact: 0.0,
            is_entry: false,
            algorithms: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_resistance(mut self, r: f64) -> Self {
        self.resistance = r;
        self
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.business_weight = w;
        self
    }

    pub fn with_domain(mut self, d: &str) -> Self {
        self.domains.insert(DomainId::new(d));
        self
    }

    pub fn with_impact(mut self, impact: f64) -> Self {
        self.crown_impact = impact;
        self
    }

    pub fn entry(mut self) -> Self {
        self.is_entry = true;
        self
    }

    pub fn with_attribute(mut self, key: &str, value: impl Into<String>) -> Self {
        self.attributes.insert(key.to_string(), value.into());
        self
    }

    pub fn is_crown_jewel(&self) -> bool {
        self.crown_impact > CROWN_JEWEL_THRESHOLD
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("resistance", self.resistance),
            ("business_weight", self.business_weight),
            ("crown_impact", self.crown_impact),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::InvalidInput(format!(
                    "node {}: {name} = {v} outside [0, 1]",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Identity of an edge within a graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub source: NodeId,
    pub target: NodeId,
    pub relation: Relation,
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -[{}]-> {}", self.source, self.relation, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub relation: Relation,
    /// Exploitability `p_uv`.
    pub exploitability: f64,
    #[serde(default)]
    pub validation_status: ValidationStatus,
    #[serde(default)]
    pub provenance: String,
}

impl DependencyEdge {
    pub fn new(source: &str, target: &str, relation: Relation, exploitability: f64) -> Self {
        Self {
            source: NodeId::from(source),
            target: NodeId::from(target),
            relation,
            exploitability,
            validation_status: ValidationStatus::Unvalidated,
            provenance: String::new(),
        }
    }

    pub fn key(&self) -> EdgeKey {
        EdgeKey {
            source: self.source.clone(),
            target: self.target.clone(),
            relation: self.relation,
        }
    }

    /// Rejected edges never take part in scoring traversals.
    pub fn is_scored(&self) -> bool {
        self.validation_status != ValidationStatus::Rejected
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssetGraph {
    nodes: BTreeMap<NodeId, AssetNode>,
    edges: Vec<DependencyEdge>,
    outgoing: BTreeMap<NodeId, Vec<usize>>,
    incoming: BTreeMap<NodeId, Vec<usize>>,
}

/// Validates nodes and edges and builds the adjacency indexes.
///
/// Duplicate `(source, target, relation)` edges collapse into one edge that
/// keeps the maximum exploitability.
pub fn build_graph(nodes: Vec<AssetNode>, edges: Vec<DependencyEdge>) -> Result<AssetGraph> {
    let mut node_map = BTreeMap::new();
    for node in nodes {
        node.check()?;
        let id = node.id.clone();
        if node_map.insert(id.clone(), node).is_some() {
            return Err(CoreError::Structure(format!("duplicate node id {id}")));
        }
    }

    let mut dedup: BTreeMap<EdgeKey, DependencyEdge> = BTreeMap::new();
    for edge in edges {
        let missing: Vec<String> = [&edge.source, &edge.target]
            .into_iter()
            .filter(|id| !node_map.contains_key(*id))
            .map(|id| id.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(CoreError::MissingNode {
                source_id: edge.source.clone(),
                target: edge.target.clone(),
                relation: edge.relation.to_string(),
                missing,
            });
        }
        if edge.source == edge.target {
            return Err(CoreError::Structure(format!("self loop on {}", edge.source)));
        }
        if !(0.0..=1.0).contains(&edge.exploitability) {
            return Err(CoreError::InvalidInput(format!(
                "edge {}: exploitability {} outside [0, 1]",
                edge.key(),
                edge.exploitability
            )));
        }
        match dedup.get_mut(&edge.key()) {
            Some(existing) => {
                if edge.exploitability > existing.exploitability {
                    *existing = edge;
                }
            }
            None => {
                dedup.insert(edge.key(), edge);
            }
        }
    }

    let edges: Vec<DependencyEdge> = dedup.into_values().collect();
    let mut outgoing: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    let mut incoming: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        outgoing.entry(e.source.clone()).or_default().push(i);
        incoming.entry(e.target.clone()).or_default().push(i);
    }
    Ok(AssetGraph {
        nodes: node_map,
        edges,
        outgoing,
        incoming,
    })
}

impl AssetGraph {
    pub fn node(&self, id: &NodeId) -> Option<&AssetNode> {
        self.nodes.get(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &AssetNode> {
        self.nodes.values()
    }

    /// Edges sorted by `(source, target, relation)`.
    pub fn edges(&self) -> &[DependencyEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, key: &EdgeKey) -> Option<&DependencyEdge> {
        self.edges
            .binary_search_by(|e| e.key().cmp(key))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn edges_from<'a>(&'a self, id: &NodeId) -> impl Iterator<Item = &'a DependencyEdge> + 'a {
        self.outgoing
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.edges[i])
    }

    pub fn edges_to<'a>(&'a self, id: &NodeId) -> impl Iterator<Item = &'a DependencyEdge> + 'a {
        self.incoming
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.edges[i])
    }

    /// Clones nodes and edges back out, suitable for [`build_graph`].
    pub fn export(&self) -> (Vec<AssetNode>, Vec<DependencyEdge>) {
        (self.nodes.values().cloned().collect(), self.edges.clone())
    }

    /// Returns a new graph with node and edge values rewritten by the given
    /// closures. Structure (ids, endpoints) must be preserved by the closures.
    pub fn map(
        &self,
        mut node_fn: impl FnMut(&mut AssetNode),
        mut edge_fn: impl FnMut(&mut DependencyEdge),
    ) -> Result<AssetGraph> {
        let (mut nodes, mut edges) = self.export();
        nodes.iter_mut().for_each(&mut node_fn);
        edges.iter_mut().for_each(&mut edge_fn);
        build_graph(nodes, edges)
    }

    /// Copy of this graph with the validation status of the given edges replaced.
    pub fn with_edge_statuses(&self, statuses: &BTreeMap<EdgeKey, ValidationStatus>) -> AssetGraph {
        let mut g = self.clone();
        for e in g.edges.iter_mut() {
            if let Some(s) = statuses.get(&e.key()) {
                e.validation_status = *s;
            }
        }
        g
    }

    /// Checks that the adjacency indexes agree with the edge list.
    pub fn check_indexes(&self) -> Result<()> {
        let mut seen_out = 0;
        for (id, idx) in &self.outgoing {
            for &i in idx {
                if &self.edges[i].source != id {
                    return Err(CoreError::Structure(format!("outgoing index mismatch at {id}")));
                }
            }
            seen_out += idx.len();
        }
        let seen_in: usize = self.incoming.values().map(Vec::len).sum();
        for (id, idx) in &self.incoming {
            if idx.iter().any(|&i| &self.edges[i].target != id) {
                return Err(CoreError::Structure(format!("incoming index mismatch at {id}")));
            }
        }
        if seen_out != self.edges.len() || seen_in != self.edges.len() {
            return Err(CoreError::Structure("index size mismatch".into()));
        }
        Ok(())
    }
}

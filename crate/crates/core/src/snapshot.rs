//! Versioned JSON snapshot document carrying graph nodes and edges.
//!
//! Unknown fields at the document, node and edge level are preserved
//! through parse → serialize.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CoreError, Result};
use crate::graph::{build_graph, AssetGraph, AssetNode, DependencyEdge};

pub const SNAPSHOT_FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    #[serde(flatten)]
    pub node: AssetNode,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    #[serde(flatten)]
    pub edge: DependencyEdge,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub format_version: String,
    pub generated_at: DateTime<Utc>,
    #[serde(default)]
    pub nodes: Vec<NodeRecord>,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
    /// Scanner tags per node id.
    #[serde(default)]
    pub provenance: BTreeMap<String, Vec<String>>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SnapshotDocument {
    pub fn new(generated_at: DateTime<Utc>) -> Self {
        Self {
            format_version: SNAPSHOT_FORMAT_VERSION.into(),
            generated_at,
            nodes: Vec::new(),
            edges: Vec::new(),
            provenance: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn from_graph(graph: &AssetGraph, generated_at: DateTime<Utc>) -> Self {
        let (nodes, edges) = graph.export();
        Self {
            nodes: nodes
                .into_iter()
                .map(|node| NodeRecord {
                    node,
                    extra: BTreeMap::new(),
                })
                .collect(),
            edges: edges
                .into_iter()
                .map(|edge| EdgeRecord {
                    edge,
                    extra: BTreeMap::new(),
                })
                .collect(),
            ..Self::new(generated_at)
        }
    }

    /// Builds and validates the graph described by this document.
    pub fn to_graph(&self) -> Result<AssetGraph> {
        build_graph(
            self.nodes.iter().map(|r| r.node.clone()).collect(),
            self.edges.iter().map(|r| r.edge.clone()).collect(),
        )
    }
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<SnapshotDocument> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CoreError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn serialize_snapshot(doc: &SnapshotDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("snapshot serializes");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_format_version_is_rejected() {
        let err = parse_snapshot(br#"{"generated_at": "2025-01-01T00:00:00Z", "nodes": []}"#).unwrap_err();
        assert!(err.to_string().contains("format_version"), "{err}");
    }

    #[test]
    fn empty_snapshot_is_valid() {
        let doc = parse_snapshot(br#"{"format_version": "1.0", "generated_at": "2025-01-01T00:00:00Z", "nodes": []}"#).unwrap();
        assert!(doc.nodes.is_empty());
        assert_eq!(doc.to_graph().unwrap().node_count(), 0);
    }

    #[test]
    fn malformed_reports_location() {
        let text = b"{\n  \"format_version\": \"1.0\",\n  \"generated_at\": \"2025-01-01T00:00:00Z\",\n  \"nodes\": [{\"id\": \"a\", \"kind\": \"spaceship\", \"resistance\": 0, \"business_weight\": 0}]\n}";
        match parse_snapshot(text).unwrap_err() {
            CoreError::Parse { line, path, .. } => {
                assert_eq!(line, 4);
                assert!(path.starts_with("nodes"), "{path}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_survive() {
        let text = br#"{"format_version":"1.0","generated_at":"2025-01-01T00:00:00Z","site":"eu-1",
            "nodes":[{"id":"a","kind":"asset","resistance":0.1,"business_weight":0.5,"owner":"team-x"}],
            "edges":[]}"#;
        let doc = parse_snapshot(text).unwrap();
        assert_eq!(doc.extra["site"], "eu-1");
        assert_eq!(doc.nodes[0].extra["owner"], "team-x");
        let again = parse_snapshot(&serialize_snapshot(&doc)).unwrap();
        assert_eq!(again, doc);
    }
}

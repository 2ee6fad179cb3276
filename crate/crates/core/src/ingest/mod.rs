//! Batch ingestion: scanner records → deduped, resolved, enriched snapshot.
//!
//! Scan directories hold `*.jsonl` files with one [`ScanRecord`] per line.
//! The vulnerability feed is a single JSONL file with one [`VulnRecord`] per
//! line. Blank lines and lines starting with `#` are skipped in both.

pub mod dedupe;
pub mod records;
pub mod resolve;
pub mod vuln;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use tracing::{info, warn};

use crate::calculators::{crown_jewel_score, edge_probability, EdgeContext};
use crate::error::{CoreError, Result};
use crate::graph::{build_graph, AssetGraph, AssetNode, DependencyEdge};
use crate::registry::ResistanceRegistry;
use crate::snapshot::SnapshotDocument;

pub use dedupe::{dedupe_assets, dedupe_with_conflicts, AttributeConflict};
pub use records::{AddressObservation, CrownFactors, RelationObservation, ScanRecord};
pub use resolve::{resolve_entities, Resolution};
pub use vuln::{enrich, normalize_cvss, weight_source, AffectedMatcher, CvssVersion, Enrichment, SourceWeights, VulnRecord, VulnSource};

pub const DEFAULT_BUSINESS_WEIGHT: f64 = 0.5;
const DEFAULT_EXPOSURE: f64 = 0.5;

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record = serde_json::from_str(trimmed).map_err(|e| CoreError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Reads every `*.jsonl` file in `dir`, in file-name order.
pub fn read_scan_dir(dir: impl AsRef<Path>) -> Result<Vec<ScanRecord>> {
    let mut files: Vec<_> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut records = Vec::new();
    for f in files {
        records.extend(read_jsonl::<ScanRecord>(&f)?);
    }
    Ok(records)
}

pub fn read_vuln_feed(path: impl AsRef<Path>) -> Result<Vec<VulnRecord>> {
    read_jsonl(path.as_ref())
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub graph: AssetGraph,
    pub provenance: BTreeMap<String, Vec<String>>,
    pub conflicts: Vec<AttributeConflict>,
    pub orphans: Vec<String>,
    pub rejected: Vec<(String, String)>,
    /// Relations whose target matched no record.
    pub dangling: Vec<String>,
}

impl IngestOutcome {
    pub fn to_snapshot(&self, generated_at: DateTime<Utc>) -> SnapshotDocument {
        let mut doc = SnapshotDocument::from_graph(&self.graph, generated_at);
        doc.provenance = self.provenance.clone();
        doc
    }
}

fn node_from_record(r: &ScanRecord, id: &str, registry: &ResistanceRegistry) -> Result<AssetNode> {
    let mut n = AssetNode::new(id, r.kind).with_label(r.display_label());
    n.resistance = match r.resistance {
        Some(v) => v,
        None => registry.weakest_link_resistance(&r.algorithms),
    };
    n.business_weight = r.business_weight.unwrap_or(DEFAULT_BUSINESS_WEIGHT);
    if let Some(c) = r.crown {
        n.crown_impact = crown_jewel_score(c.sensitivity, c.regulatory, c.criticality)?.impact;
    }
    n.is_entry = r.is_entry;
    n.domains = r.domains.clone();
    n.algorithms = r.algorithms.clone();
    n.attributes = r.attributes.clone();
    Ok(n)
}

fn relation_probability(rel: &RelationObservation, target_resistance: f64) -> Result<f64> {
    if let Some(p) = rel.exploitability {
        if !(0.0..=1.0).contains(&p) {
            return Err(CoreError::InvalidInput(format!("exploitability {p} for {} outside [0, 1]", rel.target)));
        }
        return Ok(p);
    }
    edge_probability(EdgeContext {
        exposure: rel.exposure.unwrap_or(DEFAULT_EXPOSURE),
        weakness: rel.weakness.unwrap_or(1.0 - target_resistance),
        control_effectiveness: rel.control_effectiveness.unwrap_or(0.0),
        relation_prior: rel.prior.unwrap_or(1.0),
    })
}

/// Runs dedupe → resolve → graph build → vulnerability enrichment.
pub fn ingest(
    records: Vec<ScanRecord>,
    vulns: &[VulnRecord],
    registry: &ResistanceRegistry,
    weights: &SourceWeights,
) -> Result<IngestOutcome> {
    let (mut records, conflicts) = dedupe_with_conflicts(records);
    let resolution = resolve_entities(&records);
    records.extend(resolution.synthesized);

    let mut nodes = Vec::with_capacity(records.len());
    let mut provenance = BTreeMap::new();
    for r in &records {
        let id = r.identity_key().expect("deduped records carry an identity");
        nodes.push(node_from_record(r, &id, registry)?);
        let mut tags = vec![r.scanner.clone()];
        tags.extend(r.also_seen_by.iter().cloned());
        tags.sort();
        tags.dedup();
        provenance.insert(id, tags);
    }
    let resistance: BTreeMap<&str, f64> = nodes.iter().map(|n| (n.id.as_str(), n.resistance)).collect();

    let mut edges = resolution.edges;
    let mut dangling = Vec::new();
    for r in &records {
        let source = r.identity_key().expect("identity");
        for rel in &r.relations {
            let Some(&target_r) = resistance.get(rel.target.as_str()) else {
                warn!(source = %source, target = %rel.target, "relation target not found");
                dangling.push(format!("{source} -[{}]-> {}", rel.relation.as_str(), rel.target));
                continue;
            };
            if rel.target == source {
                continue;
            }
            let mut e = DependencyEdge::new(&source, &rel.target, rel.relation, relation_probability(rel, target_r)?);
            e.provenance = r.scanner.clone();
            edges.push(e);
        }
    }
    let graph = build_graph(nodes, edges)?;
    let enrichment = enrich(&graph, vulns, weights)?;
    for id in enrichment
        .graph
        .nodes()
        .filter(|n| graph.node(&n.id).is_none())
        .map(|n| n.id.as_str().to_string())
    {
        let source = enrichment.graph.node(&crate::graph::NodeId::from(id.as_str())).and_then(|n| n.attributes.get("source").cloned());
        provenance.insert(id, vec![format!("{}:{}", vuln::ENRICHMENT_PROVENANCE, source.unwrap_or_default())]);
    }
    info!(
        nodes = enrichment.graph.node_count(),
        edges = enrichment.graph.edge_count(),
        orphans = enrichment.orphans.len(),
        "ingest complete"
    );
    Ok(IngestOutcome {
        graph: enrichment.graph,
        provenance,
        conflicts,
        orphans: enrichment.orphans,
        rejected: enrichment.rejected,
        dangling,
    })
}

/// Reads a scan directory and optional feed and returns the ingest result.
pub fn ingest_paths(scan_dir: &Path, vuln_feed: Option<&Path>, registry: &ResistanceRegistry) -> Result<IngestOutcome> {
    let records = read_scan_dir(scan_dir)?;
    let vulns = match vuln_feed {
        Some(p) => read_vuln_feed(p)?,
        None => Vec::new(),
    };
    ingest(records, &vulns, registry, &SourceWeights::default())
}

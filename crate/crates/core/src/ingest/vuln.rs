//! Vulnerability feed records, CVSS normalization, source weighting and
//! graph enrichment with CVE nodes and `EXPOSES` edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::{build_graph, AssetGraph, AssetNode, DependencyEdge, EdgeKey, NodeId, NodeKind, Relation};

pub const DEFAULT_SOURCE_WEIGHT: f64 = 0.7;
pub const ENRICHMENT_PROVENANCE: &str = "vuln-enrichment";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnSource {
    CisaKev,
    NistNvd,
    CveSearch,
    Epss,
    Osv,
    Ghsa,
    Vulners,
    Local,
}

impl VulnSource {
    pub fn as_str(self) -> &'static str {
        match self {
            VulnSource::CisaKev => "cisa_kev",
            VulnSource::NistNvd => "nist_nvd",
            VulnSource::CveSearch => "cve_search",
            VulnSource::Epss => "epss",
            VulnSource::Osv => "osv",
            VulnSource::Ghsa => "ghsa",
            VulnSource::Vulners => "vulners",
            VulnSource::Local => "local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvssVersion {
    #[serde(rename = "v2", alias = "2.0")]
    V2,
    #[serde(rename = "v3_0", alias = "3.0")]
    V3_0,
    #[serde(rename = "v3_1", alias = "3.1")]
    V3_1,
}

/// Which assets a vulnerability applies to.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AffectedMatcher {
    /// Node ids or labels (case-insensitive).
    #[serde(default)]
    pub assets: Vec<String>,
    /// Substring of a node's `software` attribute (case-insensitive).
    #[serde(default)]
    pub software: Option<String>,
    /// Exact `version` attribute, checked only together with `software`.
    #[serde(default)]
    pub version: Option<String>,
}

impl AffectedMatcher {
    pub fn matches(&self, node: &AssetNode) -> bool {
        if node.kind == NodeKind::Cve {
            return false;
        }
        let by_name = self
            .assets
            .iter()
            .any(|a| a.eq_ignore_ascii_case(node.id.as_str()) || a.eq_ignore_ascii_case(&node.label));
        let by_software = self.software.as_deref().is_some_and(|sw| {
            let installed = node.attributes.get("software").map(|s| s.to_ascii_lowercase());
            installed.is_some_and(|s| s.contains(&sw.to_ascii_lowercase()))
                && self
                    .version
                    .as_deref()
                    .is_none_or(|v| node.attributes.get("version").map(String::as_str) == Some(v))
        });
        by_name || by_software
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnRecord {
    pub cve_id: String,
    pub source: VulnSource,
    pub cvss_version: CvssVersion,
    pub base_score: f64,
    #[serde(default)]
    pub affected: AffectedMatcher,
}

fn valid_cve_id(id: &str) -> bool {
    let mut parts = id.split('-');
    matches!(
        (parts.next(), parts.next(), parts.next(), parts.next()),
        (Some("CVE"), Some(year), Some(seq), None)
            if year.len() == 4 && year.bytes().all(|b| b.is_ascii_digit())
                && seq.len() >= 4 && seq.bytes().all(|b| b.is_ascii_digit())
    )
}

impl VulnRecord {
    pub fn check(&self) -> Result<()> {
        if !valid_cve_id(&self.cve_id) {
            return Err(CoreError::InvalidInput(format!("malformed CVE id {:?}", self.cve_id)));
        }
        normalize_cvss(self).map(|_| ())
    }
}

/// Severity in `[0, 1]`: `base_score / 10`, the same rule for v2, v3.0 and v3.1.
pub fn normalize_cvss(v: &VulnRecord) -> Result<f64> {
    if !(0.0..=10.0).contains(&v.base_score) {
        return Err(CoreError::InvalidInput(format!(
            "{}: base score {} outside [0, 10]",
            v.cve_id, v.base_score
        )));
    }
    Ok(v.base_score / 10.0)
}

/// Reliability weights per vulnerability source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceWeights {
    pub weights: BTreeMap<VulnSource, f64>,
    pub default: f64,
}

impl Default for SourceWeights {
    fn default() -> Self {
        Self {
            weights: BTreeMap::from([
                (VulnSource::CisaKev, 1.0),
                (VulnSource::NistNvd, 0.9),
                (VulnSource::CveSearch, 0.8),
            ]),
            default: DEFAULT_SOURCE_WEIGHT,
        }
    }
}

pub fn weight_source(source: VulnSource, weights: &SourceWeights) -> f64 {
    weights.weights.get(&source).copied().unwrap_or(weights.default)
}

#[derive(Debug, Clone)]
pub struct Enrichment {
    pub graph: AssetGraph,
    /// CVE ids that matched no asset.
    pub orphans: Vec<String>,
    /// Records rejected with a reason.
    pub rejected: Vec<(String, String)>,
}

/// Adds one CVE node per matched `cve_id` and `EXPOSES` edges from every
/// matching asset with `p = reliability × severity`. Reports of the same CVE
/// from several sources collapse, keeping the largest product.
pub fn enrich(graph: &AssetGraph, vulns: &[VulnRecord], weights: &SourceWeights) -> Result<Enrichment> {
    struct Best<'a> {
        score: f64,
        record: &'a VulnRecord,
        assets: BTreeMap<NodeId, f64>,
    }
    let mut by_cve: BTreeMap<&str, Best> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();
    for v in vulns {
        if let Err(e) = v.check() {
            rejected.push((v.cve_id.clone(), e.to_string()));
            continue;
        }
        seen.insert(v.cve_id.as_str());
        let score = weight_source(v.source, weights) * normalize_cvss(v)?;
        let matched: Vec<NodeId> = graph.nodes().filter(|n| v.affected.matches(n)).map(|n| n.id.clone()).collect();
        if matched.is_empty() {
            continue;
        }
        let best = by_cve.entry(&v.cve_id).or_insert(Best {
            score,
            record: v,
            assets: BTreeMap::new(),
        });
        if score > best.score {
            best.score = score;
            best.record = v;
        }
        for id in matched {
            let p = best.assets.entry(id).or_insert(score);
            *p = p.max(score);
        }
    }
    let orphans = seen.into_iter().filter(|c| !by_cve.contains_key(c)).map(String::from).collect();

    let (mut nodes, mut edges) = graph.export();
    let existing: BTreeSet<NodeId> = nodes.iter().map(|n| n.id.clone()).collect();
    for (cve, best) in &by_cve {
        let id = NodeId::from(format!("cve:{cve}").as_str());
        if !existing.contains(&id) {
            let severity = normalize_cvss(best.record)?;
            nodes.push(
                AssetNode::new(id.as_str(), NodeKind::Cve)
                    .with_label(*cve)
                    .with_weight(severity)
                    .with_attribute("source", best.record.source.as_str())
                    .with_attribute("base_score", best.record.base_score.to_string()),
            );
        }
        for (asset, &p) in &best.assets {
            let mut e = DependencyEdge::new(asset.as_str(), id.as_str(), Relation::Exposes, p.clamp(0.0, 1.0));
            e.provenance = format!("{ENRICHMENT_PROVENANCE}:{}", best.record.source.as_str());
            edges.push(e);
        }
    }
    Ok(Enrichment {
        graph: build_graph(nodes, edges)?,
        orphans,
        rejected,
    })
}

/// True for `EXPOSES` edges created by [`enrich`].
pub fn is_enrichment_edge(key: &EdgeKey, provenance: &str) -> bool {
    key.relation == Relation::Exposes && provenance.starts_with(ENRICHMENT_PROVENANCE)
}

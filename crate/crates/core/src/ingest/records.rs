use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::DomainId;
use crate::graph::NodeKind;

/// One observation emitted by a discovery scanner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub scanner: String,
    pub observed_at: DateTime<Utc>,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fqdn: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub algorithms: Vec<String>,
    /// DNS-style address linkages observed for this record.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub addresses: Vec<AddressObservation>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub business_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crown: Option<CrownFactors>,
    #[serde(default)]
    pub is_entry: bool,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub domains: BTreeSet<DomainId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<RelationObservation>,
    /// Other scanners whose records were merged into this one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub also_seen_by: Vec<String>,
}

impl ScanRecord {
    pub fn new(scanner: &str, observed_at: DateTime<Utc>, kind: NodeKind) -> Self {
        Self {
            scanner: scanner.into(),
            observed_at,
            kind,
            fqdn: None,
            ip: None,
            fingerprint: None,
            label: None,
            algorithms: Vec::new(),
            addresses: Vec::new(),
            attributes: BTreeMap::new(),
            business_weight: None,
            resistance: None,
            crown: None,
            is_entry: false,
            domains: BTreeSet::new(),
            relations: Vec::new(),
            also_seen_by: Vec::new(),
        }
    }

    /// Canonical identity: lowercased FQDN, else IP, else lowercased
    /// certificate fingerprint, else label.
    pub fn identity_key(&self) -> Option<String> {
        if let Some(f) = self.fqdn.as_deref().filter(|s| !s.trim().is_empty()) {
            return Some(format!("fqdn:{}", canonical_fqdn(f)));
        }
        if let Some(ip) = self.ip.as_deref().filter(|s| !s.trim().is_empty()) {
            return Some(format!("ip:{}", ip.trim()));
        }
        if let Some(fp) = self.fingerprint.as_deref().filter(|s| !s.trim().is_empty()) {
            return Some(format!("fp:{}", canonical_fingerprint(fp)));
        }
        self.label
            .as_deref()
            .filter(|s| !s.trim().is_empty())
            .map(|l| format!("{}:{}", self.kind.as_str(), l.trim()))
    }

    pub fn display_label(&self) -> String {
        self.label
            .clone()
            .or_else(|| self.fqdn.as_deref().map(canonical_fqdn))
            .or_else(|| self.ip.clone())
            .or_else(|| self.fingerprint.as_deref().map(canonical_fingerprint))
            .unwrap_or_default()
    }
}

pub fn canonical_fqdn(f: &str) -> String {
    f.trim().trim_end_matches('.').to_ascii_lowercase()
}

pub fn canonical_fingerprint(fp: &str) -> String {
    fp.trim().replace(':', "").to_ascii_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressObservation {
    pub ip: String,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrownFactors {
    pub sensitivity: f64,
    pub regulatory: f64,
    pub criticality: f64,
}

/// A typed relationship observed by a scanner, pointing at another record's
/// identity key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationObservation {
    pub relation: crate::graph::Relation,
    pub target: String,
    /// Explicit exploitability; when absent it is derived from the context fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploitability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weakness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_effectiveness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
}

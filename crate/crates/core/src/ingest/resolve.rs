//! Links domain records to the IP addresses they resolve to.

use std::collections::BTreeSet;

use super::records::ScanRecord;
use crate::graph::{DependencyEdge, NodeKind, Relation};

pub const RESOLVER_SCANNER: &str = "entity-resolution";

#[derive(Debug, Clone, Default)]
pub struct Resolution {
    /// IP records created for addresses that no scanner reported as a node.
    pub synthesized: Vec<ScanRecord>,
    pub edges: Vec<DependencyEdge>,
}

/// Emits one `RESOLVES_TO` edge per address observation on an FQDN record,
/// with exploitability equal to the observation confidence. Expects deduped
/// input; the node ids are the records' identity keys.
pub fn resolve_entities(records: &[ScanRecord]) -> Resolution {
    let mut known: BTreeSet<String> = records.iter().filter_map(ScanRecord::identity_key).collect();
    let mut out = Resolution::default();
    for r in records {
        let (Some(source), Some(_)) = (r.identity_key(), r.fqdn.as_ref()) else {
            continue;
        };
        for a in &r.addresses {
            let ip = a.ip.trim();
            if ip.is_empty() {
                continue;
            }
            let target = format!("ip:{ip}");
            if known.insert(target.clone()) {
                let mut synth = ScanRecord::new(RESOLVER_SCANNER, r.observed_at, NodeKind::Ip);
                synth.ip = Some(ip.to_string());
                out.synthesized.push(synth);
            }
            let mut e = DependencyEdge::new(&source, &target, Relation::ResolvesTo, a.confidence.clamp(0.0, 1.0));
            e.provenance = r.scanner.clone();
            out.edges.push(e);
        }
    }
    out
}

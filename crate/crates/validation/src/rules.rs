//! Deterministic per-relation heuristics used to cross-check LLM verdicts.

use pqready_core::graph::{AssetGraph, AssetNode, DependencyEdge, NodeKind, Relation};
use pqready_core::ingest::vuln::ENRICHMENT_PROVENANCE;

use crate::model::{Verdict, VerdictSource};

const PASS_CONFIDENCE: f64 = 0.8;
const FAIL_CONFIDENCE: f64 = 0.6;

fn verdict(valid: bool, reasoning: impl Into<String>) -> Verdict {
    let c = if valid { PASS_CONFIDENCE } else { FAIL_CONFIDENCE };
    Verdict::new(valid, c, reasoning, VerdictSource::Rule)
}

fn host_name(n: &AssetNode) -> String {
    let raw = if n.label.is_empty() { n.id.as_str() } else { &n.label };
    raw.strip_prefix("fqdn:").unwrap_or(raw).trim_end_matches('.').to_ascii_lowercase()
}

/// True when a certificate name (possibly a `*.` wildcard) covers `host`.
pub fn name_covers(cert_name: &str, host: &str) -> bool {
    let cert = cert_name.trim().trim_end_matches('.').to_ascii_lowercase();
    match cert.strip_prefix("*.") {
        Some(suffix) => host.len() > suffix.len() + 1 && host.ends_with(&format!(".{suffix}")),
        None => !cert.is_empty() && (host == cert || host.ends_with(&format!(".{cert}"))),
    }
}

fn has_services(n: &AssetNode) -> bool {
    ["services", "ports", "port"]
        .iter()
        .any(|k| n.attributes.get(*k).is_some_and(|v| !v.trim().is_empty()))
}

pub fn rule_validate(edge: &DependencyEdge, graph: &AssetGraph) -> Verdict {
    let (Some(src), Some(dst)) = (graph.node(&edge.source), graph.node(&edge.target)) else {
        return verdict(false, "edge endpoint missing from graph");
    };
    match edge.relation {
        Relation::Uses => {
            let (asset, cert) = if dst.kind == NodeKind::Certificate { (src, dst) } else { (dst, src) };
            if cert.kind != NodeKind::Certificate {
                return verdict(false, "USES edge without a certificate endpoint");
            }
            let cn = cert.attributes.get("cn").cloned().unwrap_or_else(|| cert.label.clone());
            let ok = name_covers(&cn, &host_name(asset));
            verdict(ok, format!("certificate name {cn:?} {} asset {}", if ok { "covers" } else { "does not cover" }, host_name(asset)))
        }
        Relation::ConnectsTo => {
            let ok = has_services(dst);
            verdict(ok, if ok { "target exposes a service port" } else { "target exposes no service" })
        }
        Relation::Exposes => {
            let ok = edge.provenance.starts_with(ENRICHMENT_PROVENANCE);
            verdict(ok, if ok { "vulnerability matcher matched during enrichment" } else { "no enrichment match recorded" })
        }
        Relation::DependsOn => {
            let ok = matches!(dst.kind, NodeKind::Service | NodeKind::Asset);
            verdict(ok, format!("dependency target kind is {}", dst.kind.as_str()))
        }
        Relation::ResolvesTo => {
            let ok = edge.exploitability > 0.5;
            verdict(ok, format!("resolution confidence {:.2}", edge.exploitability))
        }
        // no heuristic: keep, so the LLM stance decides
        other => verdict(true, format!("no rule for {}", other.as_str())),
    }
}

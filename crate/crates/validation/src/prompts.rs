//! Relation-specific validation prompts.
//!
//! `USES`, `CONNECTS_TO`, `EXPOSES` and `DEPENDS_ON` have dedicated framings.
//! Every other relation gets the generic framing, and the rendered prompt is
//! flagged so reviewers know no relation-specific guidance was applied.

use std::collections::BTreeMap;

use pqready_core::graph::{AssetGraph, AssetNode, DependencyEdge, Relation};

const RESPONSE_FORMAT: &str = "Answer with a single JSON object: \
{\"valid\": true or false, \"confidence\": number between 0 and 1, \"reasoning\": short explanation}.";

const PREAMBLE: &str = "You review dependency edges in an enterprise cryptographic asset graph used to \
estimate exposure to quantum-capable adversaries (harvest-now, decrypt-later). Judge whether the \
relationship below really exists, paying attention to the cryptography in use and whether it is \
quantum-vulnerable (RSA, ECC, finite-field DH) or post-quantum (ML-KEM, ML-DSA, SLH-DSA).";

const USES: &str = "Relationship: asset {source_label} USES certificate {target_label}.
Certificate details: algorithm: {algorithm}, key_size: {key_size}, fingerprint: {fingerprint}, subject: {target_cn}.
Asset details: kind {source_kind}, observed algorithms {source_algorithms}.
Does the asset plausibly present or rely on this certificate (hostname coverage, deployment context)? \
Note whether the certificate key is quantum-vulnerable.";

const CONNECTS_TO: &str = "Relationship: {source_label} CONNECTS_TO {target_label}.
Source: kind {source_kind}, algorithms {source_algorithms}.
Target: kind {target_kind}, exposed services {target_services}, algorithms {target_algorithms}.
Is a network connection between these two endpoints plausible given the exposed services? \
Consider whether the channel is protected by quantum-vulnerable key exchange.";

const EXPOSES: &str = "Relationship: asset {source_label} EXPOSES vulnerability {target_label}.
Asset technology stack: software {source_software}, version {source_version}, algorithms {source_algorithms}.
Vulnerability: {target_label}, CVSS base score {target_base_score}, reported by {target_source}.
Does the vulnerability apply to this exact software version? \
Reject the edge if the installed version is outside the affected range.";

const DEPENDS_ON: &str = "Relationship: {source_label} DEPENDS_ON {target_label}.
Source: kind {source_kind}, algorithms {source_algorithms}.
Target: kind {target_kind}, class {target_class}, algorithms {target_algorithms}.
Would a failure or cryptographic compromise of the target propagate to the source? \
Pay particular attention to VPN and cloud interconnects whose key exchange is quantum-vulnerable.";

const GENERIC: &str = "Relationship: {source_label} {relation} {target_label}.
Source: kind {source_kind}, algorithms {source_algorithms}.
Target: kind {target_kind}, algorithms {target_algorithms}.
Is this relationship plausible, and does it carry cryptographic risk relevant to a quantum-capable adversary?";

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub text: String,
    pub relation: Relation,
    /// True when no relation-specific template exists and the generic one was used.
    pub generic: bool,
}

fn template_for(relation: Relation) -> Option<&'static str> {
    match relation {
        Relation::Uses => Some(USES),
        Relation::ConnectsTo => Some(CONNECTS_TO),
        Relation::Exposes => Some(EXPOSES),
        Relation::DependsOn => Some(DEPENDS_ON),
        _ => None,
    }
}

fn or_unknown(s: Option<&str>) -> String {
    match s {
        Some(v) if !v.trim().is_empty() => v.to_string(),
        _ => "unknown".into(),
    }
}

fn node_fields(prefix: &str, n: Option<&AssetNode>, out: &mut BTreeMap<String, String>) {
    let attr = |k: &str| n.and_then(|n| n.attributes.get(k)).map(String::as_str);
    let label = n.map(|n| if n.label.is_empty() { n.id.as_str() } else { n.label.as_str() });
    out.insert(format!("{prefix}_label"), or_unknown(label));
    out.insert(format!("{prefix}_kind"), or_unknown(n.map(|n| n.kind.as_str())));
    let algs = n.map(|n| n.algorithms.join(", ")).unwrap_or_default();
    out.insert(format!("{prefix}_algorithms"), or_unknown(Some(&algs)));
    for key in ["software", "version", "services", "base_score", "source", "cn"] {
        out.insert(format!("{prefix}_{key}"), or_unknown(attr(key)));
    }
    out.insert(format!("{prefix}_class"), or_unknown(attr("dependency_class")));
    if prefix == "target" {
        let services = attr("services").or(attr("ports"));
        out.insert("target_services".into(), or_unknown(services));
        out.insert("target_cn".into(), or_unknown(attr("cn").or(label)));
        out.insert(
            "algorithm".into(),
            or_unknown(attr("algorithm").or(n.and_then(|n| n.algorithms.first().map(String::as_str)))),
        );
        out.insert("key_size".into(), or_unknown(attr("key_size")));
        out.insert("fingerprint".into(), or_unknown(attr("fingerprint")));
    }
}

fn fill(template: &str, fields: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(template.len() + 128);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        match after.find('}') {
            Some(end) if fields.contains_key(&after[..end]) => {
                out.push_str(&fields[&after[..end]]);
                rest = &after[end + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn render_prompt(edge: &DependencyEdge, graph: &AssetGraph) -> RenderedPrompt {
    let mut fields = BTreeMap::new();
    node_fields("source", graph.node(&edge.source), &mut fields);
    node_fields("target", graph.node(&edge.target), &mut fields);
    fields.insert("relation".into(), edge.relation.as_str().into());
    let (template, generic) = match template_for(edge.relation) {
        Some(t) => (t, false),
        None => (GENERIC, true),
    };
    let mut text = format!("{PREAMBLE}\n\n{}\n", fill(template, &fields));
    text.push_str(&format!("Current exploitability estimate: {:.2}.\n\n{RESPONSE_FORMAT}", edge.exploitability));
    RenderedPrompt {
        text,
        relation: edge.relation,
        generic,
    }
}

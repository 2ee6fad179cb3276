//! Majority voting, auto-approval and disagreement routing.

use pqready_core::graph::{AssetGraph, DependencyEdge};

use crate::model::{FinalDecision, ValidationSettings, Verdict};

/// Values of a target node's `dependency_class` attribute that select the
/// stricter confidence threshold.
pub const VPN_CLOUD_CLASSES: [&str; 2] = ["vpn_service", "cloud_connection"];

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub final_decision: FinalDecision,
    pub reason: String,
    /// Majority stance and mean confidence of the majority voters; `None`
    /// when auto-approval short-circuited the vote.
    pub llm_stance: Option<bool>,
    pub llm_confidence: Option<f64>,
}

/// The auto-approve rule that fires for this edge, if any.
pub fn auto_approval(edge: &DependencyEdge, settings: &ValidationSettings) -> Option<String> {
    settings
        .auto_approve_rules
        .iter()
        .find(|r| r.relation == edge.relation && edge.exploitability > r.min_probability)
        .map(|r| format!("auto-approved: {} with p = {} > {}", edge.relation.as_str(), edge.exploitability, r.min_probability))
}

pub fn is_vpn_or_cloud(edge: &DependencyEdge, graph: &AssetGraph) -> bool {
    graph
        .node(&edge.target)
        .and_then(|n| n.attributes.get("dependency_class"))
        .is_some_and(|c| VPN_CLOUD_CLASSES.iter().any(|k| c.eq_ignore_ascii_case(k)))
}

pub fn confidence_threshold(edge: &DependencyEdge, graph: &AssetGraph, settings: &ValidationSettings) -> f64 {
    if is_vpn_or_cloud(edge, graph) {
        settings.threshold_vpn_cloud
    } else {
        settings.threshold_general
    }
}

/// `(stance, mean confidence of the majority)`. A tie counts as invalid.
pub fn majority(verdicts: &[Verdict]) -> (bool, f64) {
    let yes = verdicts.iter().filter(|v| v.valid).count();
    let stance = 2 * yes > verdicts.len();
    let side: Vec<f64> = verdicts.iter().filter(|v| v.valid == stance).map(|v| v.confidence).collect();
    let conf = if side.is_empty() { 0.0 } else { side.iter().sum::<f64>() / side.len() as f64 };
    (stance, conf)
}

/// Routes one edge. Auto-approval is checked first; otherwise the item goes
/// to review when the majority confidence is under the relation threshold,
/// the majority disagrees with the rule verdict, or an endpoint is
/// high-criticality (`w_v` or `I_c` over the review cut-offs).
pub fn aggregate(
    verdicts: &[Verdict],
    rule: &Verdict,
    edge: &DependencyEdge,
    settings: &ValidationSettings,
    graph: &AssetGraph,
) -> Decision {
    if let Some(reason) = auto_approval(edge, settings) {
        return Decision {
            final_decision: FinalDecision::AutoApproved,
            reason,
            llm_stance: None,
            llm_confidence: None,
        };
    }
    let (stance, conf) = majority(verdicts);
    let mut reasons = Vec::new();
    let threshold = confidence_threshold(edge, graph, settings);
    if conf < threshold {
        reasons.push(format!("LLM confidence {conf:.3} below threshold {threshold}"));
    }
    if stance != rule.valid {
        reasons.push(format!(
            "rule={} but LLM={}",
            if rule.valid { "keep" } else { "remove" },
            if stance { "keep" } else { "remove" }
        ));
    }
    for id in [&edge.source, &edge.target] {
        if let Some(n) = graph.node(id) {
            if n.business_weight > settings.crown_review_w || n.crown_impact > settings.crown_review_i {
                reasons.push(format!("high-criticality endpoint {id} (w = {}, I = {})", n.business_weight, n.crown_impact));
            }
        }
    }
    let final_decision = match (reasons.is_empty(), stance) {
        (false, _) => FinalDecision::NeedsReview,
        (true, true) => FinalDecision::Approved,
        (true, false) => FinalDecision::Rejected,
    };
    let reason = if reasons.is_empty() {
        format!("LLM majority {} at confidence {conf:.3}, rule agrees", if stance { "keep" } else { "remove" })
    } else {
        reasons.join("; ")
    };
    Decision {
        final_decision,
        reason,
        llm_stance: Some(stance),
        llm_confidence: Some(conf),
    }
}

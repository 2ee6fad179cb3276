use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use pqready_core::graph::{EdgeKey, Relation, ValidationStatus};

use crate::error::{Result, ValidationError};

pub type ItemId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Llm,
    Rule,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    pub confidence: f64,
    pub reasoning: String,
    pub source: VerdictSource,
}

impl Verdict {
    pub fn new(valid: bool, confidence: f64, reasoning: impl Into<String>, source: VerdictSource) -> Self {
        Self {
            valid,
            confidence: confidence.clamp(0.0, 1.0),
            reasoning: reasoning.into(),
            source,
        }
    }

    /// Stand-in for a model response that could not be parsed.
    pub fn parse_failure() -> Self {
        Self::new(false, 0.0, "parse failure", VerdictSource::Llm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Pending,
    Processing,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalDecision {
    AutoApproved,
    Approved,
    Rejected,
    NeedsReview,
}

impl FinalDecision {
    /// Edge status written back to the graph for this outcome.
    pub fn edge_status(self) -> ValidationStatus {
        match self {
            FinalDecision::AutoApproved => ValidationStatus::AutoApproved,
            FinalDecision::Approved => ValidationStatus::LlmApproved,
            FinalDecision::Rejected => ValidationStatus::Rejected,
            FinalDecision::NeedsReview => ValidationStatus::UnderReview,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanDecision {
    Approve,
    Reject,
}

impl HumanDecision {
    pub fn edge_status(self) -> ValidationStatus {
        match self {
            HumanDecision::Approve => ValidationStatus::HumanApproved,
            HumanDecision::Reject => ValidationStatus::Rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanRecord {
    pub decision: HumanDecision,
    pub reviewer: String,
    pub decided_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationItem {
    pub id: ItemId,
    pub edge: EdgeKey,
    /// Graph version the edge was enqueued from.
    pub version: u64,
    pub status: ItemStatus,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_attempt_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
    #[serde(default)]
    pub llm_verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_confidence: Option<f64>,
    #[serde(default, rename = "final", skip_serializing_if = "Option::is_none")]
    pub final_decision: Option<FinalDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routed_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<HumanRecord>,
}

impl ValidationItem {
    pub fn new(id: ItemId, edge: EdgeKey, version: u64, created_at: DateTime<Utc>) -> Self {
        Self {
            id,
            edge,
            version,
            status: ItemStatus::Pending,
            created_at,
            attempts: 0,
            next_attempt_at: None,
            last_error: None,
            llm_verdicts: Vec::new(),
            rule_verdict: None,
            llm_confidence: None,
            final_decision: None,
            routed_reason: None,
            human: None,
        }
    }

    pub fn awaiting_review(&self) -> bool {
        self.final_decision == Some(FinalDecision::NeedsReview) && self.human.is_none()
    }
}

/// Auto-approve edges of `relation` whose exploitability exceeds `min_probability`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoApproveRule {
    pub relation: Relation,
    pub min_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationSettings {
    pub model_name: String,
    pub endpoint: String,
    /// Votes per item; odd so the majority is never tied.
    pub votes_per_item: usize,
    pub threshold_general: f64,
    /// Confidence threshold for VPN-service and cloud-connection dependencies.
    pub threshold_vpn_cloud: f64,
    pub auto_approve_rules: Vec<AutoApproveRule>,
    pub scheduler_interval_seconds: u64,
    pub crown_review_w: f64,
    #[serde(rename = "crown_review_I")]
    pub crown_review_i: f64,
    pub batch_size: usize,
    /// LLM requests in flight at once during a tick.
    pub parallelism: usize,
    pub request_timeout_seconds: u64,
    pub temperature: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            model_name: "gemma3:12b".into(),
            endpoint: "http://localhost:11434".into(),
            votes_per_item: 3,
            threshold_general: 0.5,
            threshold_vpn_cloud: 0.7,
            auto_approve_rules: vec![AutoApproveRule {
                relation: Relation::ResolvesTo,
                min_probability: 0.5,
            }],
            scheduler_interval_seconds: 30,
            crown_review_w: 0.8,
            crown_review_i: 0.9,
            batch_size: 10,
            parallelism: 4,
            request_timeout_seconds: 60,
            temperature: 0.7,
        }
    }
}

impl ValidationSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ValidationError::InvalidInput(m));
        if self.votes_per_item == 0 || self.votes_per_item % 2 == 0 {
            return bad(format!("votes_per_item must be odd and at least 1 (got {})", self.votes_per_item));
        }
        for (name, v) in [
            ("threshold_general", self.threshold_general),
            ("threshold_vpn_cloud", self.threshold_vpn_cloud),
            ("crown_review_w", self.crown_review_w),
            ("crown_review_I", self.crown_review_i),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        for r in &self.auto_approve_rules {
            if !(0.0..=1.0).contains(&r.min_probability) {
                return bad(format!("auto-approve threshold {} outside [0, 1]", r.min_probability));
            }
        }
        if self.scheduler_interval_seconds < 1 {
            return bad("scheduler_interval_seconds must be at least 1".into());
        }
        if self.batch_size == 0 || self.parallelism == 0 || self.request_timeout_seconds == 0 {
            return bad("batch_size, parallelism and request_timeout_seconds must be positive".into());
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty".into());
        }
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return bad(format!("endpoint {:?} is not an http(s) URL", self.endpoint));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.temperature));
        }
        Ok(())
    }
}

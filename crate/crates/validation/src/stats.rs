//! Summary rates over completed validation items.

use serde::{Deserialize, Serialize};

use crate::model::{FinalDecision, ItemStatus};
use crate::store::Store;

/// Rates are `None` when no item has completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub total: usize,
    pub completed: usize,
    pub pending: usize,
    /// Share of completed items whose outcome keeps the edge.
    pub validity_rate: Option<f64>,
    /// Mean LLM confidence over completed items that went through a vote.
    pub mean_confidence: Option<f64>,
    pub disagreement_rate: Option<f64>,
}

pub fn pipeline_stats(store: &Store) -> PipelineStats {
    let items = store.items();
    let done: Vec<_> = items.iter().filter(|i| i.status == ItemStatus::Complete).collect();
    let n = done.len();
    let rate = |k: usize| (n > 0).then(|| k as f64 / n as f64);
    let valid = done
        .iter()
        .filter(|i| matches!(i.final_decision, Some(FinalDecision::AutoApproved | FinalDecision::Approved)))
        .count();
    let review = done.iter().filter(|i| i.final_decision == Some(FinalDecision::NeedsReview)).count();
    let confs: Vec<f64> = done.iter().filter_map(|i| i.llm_confidence).collect();
    PipelineStats {
        total: items.len(),
        completed: n,
        pending: items.iter().filter(|i| i.status != ItemStatus::Complete).count(),
        validity_rate: rate(valid),
        mean_confidence: (!confs.is_empty()).then(|| confs.iter().sum::<f64>() / confs.len() as f64),
        disagreement_rate: rate(review),
    }
}

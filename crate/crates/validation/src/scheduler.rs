//! Queue draining: claim a batch, run each item through
//! render → llm_validate → rule_validate → aggregate, then complete or defer.

use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;
use tracing::{info, warn};

use crate::aggregate::{aggregate, auto_approval};
use crate::error::Result;
use crate::llm::{llm_validate, LlmBackend};
use crate::model::{FinalDecision, ValidationItem, ValidationSettings};
use crate::prompts::render_prompt;
use crate::rules::rule_validate;
use crate::store::{cache_key, Store};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickReport {
    pub claimed: usize,
    pub completed: usize,
    pub deferred: usize,
    pub auto_approved: usize,
    pub needs_review: usize,
    pub cache_hits: usize,
}

enum Outcome {
    Completed { final_decision: FinalDecision, cache_hit: bool },
    Deferred,
}

async fn process(store: &Store, llm: &dyn LlmBackend, settings: &ValidationSettings, item: ValidationItem, now: DateTime<Utc>) -> Result<Outcome> {
    let (_, graph) = store.graph(Some(item.version))?;
    let Some(edge) = graph.edge(&item.edge).cloned() else {
        store.defer_item(item.id, "edge missing from its graph version", now)?;
        return Ok(Outcome::Deferred);
    };
    let rule = rule_validate(&edge, &graph);

    // auto-approval bypasses the model entirely
    if auto_approval(&edge, settings).is_some() {
        let decision = aggregate(&[], &rule, &edge, settings, &graph);
        store.complete_item(item.id, Vec::new(), rule, &decision)?;
        return Ok(Outcome::Completed { final_decision: decision.final_decision, cache_hit: false });
    }

    let key = cache_key(&item.edge, settings);
    let (verdicts, cache_hit) = match store.cache_lookup(&key) {
        Some(hit) => (hit.verdicts, true),
        None => {
            let prompt = render_prompt(&edge, &graph);
            match llm_validate(llm, &prompt.text, settings).await {
                Ok(v) => {
                    store.cache_insert(key, v.clone(), now)?;
                    (v, false)
                }
                Err(e) => {
                    let item = store.defer_item(item.id, &e.to_string(), now)?;
                    warn!(item = item.id, error = %e, retry_at = ?item.next_attempt_at, "validation deferred");
                    return Ok(Outcome::Deferred);
                }
            }
        }
    };
    let decision = aggregate(&verdicts, &rule, &edge, settings, &graph);
    store.complete_item(item.id, verdicts, rule, &decision)?;
    Ok(Outcome::Completed { final_decision: decision.final_decision, cache_hit })
}

/// One pass over the queue. Settings are re-read from the store each tick.
/// A failure on one item never stops the rest of the batch.
pub async fn scheduler_tick(store: &Store, llm: &dyn LlmBackend, now: DateTime<Utc>) -> Result<TickReport> {
    let settings = store.settings();
    let batch = store.claim_batch(settings.batch_size, now)?;
    let mut report = TickReport { claimed: batch.len(), ..TickReport::default() };
    if batch.is_empty() {
        return Ok(report);
    }
    let settings = &settings;
    let outcomes: Vec<(u64, Result<Outcome>)> = stream::iter(batch)
        .map(|item| async move {
            let id = item.id;
            (id, process(store, llm, settings, item, now).await)
        })
        .buffer_unordered(settings.parallelism.max(1))
        .collect()
        .await;
    for (id, outcome) in outcomes {
        match outcome {
            Ok(Outcome::Completed { final_decision, cache_hit }) => {
                report.completed += 1;
                report.cache_hits += usize::from(cache_hit);
                match final_decision {
                    FinalDecision::AutoApproved => report.auto_approved += 1,
                    FinalDecision::NeedsReview => report.needs_review += 1,
                    _ => {}
                }
            }
            Ok(Outcome::Deferred) => report.deferred += 1,
            Err(e) => {
                warn!(item = id, error = %e, "item failed");
                // best effort: put it back so it is not stranded in processing
                if store.defer_item(id, &e.to_string(), now).is_ok() {
                    report.deferred += 1;
                }
            }
        }
    }
    info!(?report, "scheduler tick");
    Ok(report)
}

/// Runs ticks every `scheduler_interval_seconds` until `shutdown` flips to true.
pub async fn run_scheduler(store: Store, llm: Arc<dyn LlmBackend>, mut shutdown: watch::Receiver<bool>) {
    loop {
        if *shutdown.borrow() {
            break;
        }
        if let Err(e) = scheduler_tick(&store, llm.as_ref(), Utc::now()).await {
            warn!(error = %e, "scheduler tick failed");
        }
        let interval = Duration::from_secs(store.settings().scheduler_interval_seconds.max(1));
        tokio::select! {
            _ = tokio::time::sleep(interval) => {}
            changed = shutdown.changed() => {
                if changed.is_err() {
                    break;
                }
            }
        }
    }
    info!("scheduler stopped");
}

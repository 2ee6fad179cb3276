use chrono::{DateTime, Duration, TimeZone, Utc};
use pqready_core::graph::{build_graph, AssetNode, DependencyEdge, NodeKind, Relation, ValidationStatus};
use pqready_core::snapshot::SnapshotDocument;
use pqready_validation::{
    pipeline_stats, scheduler_tick, AutoApproveRule, FinalDecision, HumanDecision, ItemStatus, LlmError, Store,
    StubLlm, ValidationError, ValidationSettings,
};

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap()
}

#[derive(Debug, Clone, Copy)]
struct Case {
    confident: bool,
    rule_agrees: bool,
    crown: bool,
    auto: bool,
    keep: bool,
}

fn expected(c: Case) -> FinalDecision {
    if c.auto {
        FinalDecision::AutoApproved
    } else if !c.confident || !c.rule_agrees || c.crown {
        FinalDecision::NeedsReview
    } else if c.keep {
        FinalDecision::Approved
    } else {
        FinalDecision::Rejected
    }
}

/// One DEPENDS_ON edge whose rule verdict, endpoint criticality and
/// auto-approval are set by the case.
fn case_snapshot(c: Case) -> SnapshotDocument {
    // the rule keeps DEPENDS_ON only when the target is a service or asset
    let rule_keeps = c.rule_agrees == c.keep;
    let kind = if rule_keeps { NodeKind::Service } else { NodeKind::Key };
    let target = AssetNode::new("dep", kind).with_weight(if c.crown { 0.95 } else { 0.5 });
    let source = AssetNode::new("app", NodeKind::Asset).with_weight(0.5);
    let edge = DependencyEdge::new("app", "dep", Relation::DependsOn, 0.6);
    SnapshotDocument::from_graph(&build_graph(vec![source, target], vec![edge]).unwrap(), t0())
}

fn case_settings(c: Case) -> ValidationSettings {
    ValidationSettings {
        auto_approve_rules: if c.auto {
            vec![AutoApproveRule { relation: Relation::DependsOn, min_probability: 0.5 }]
        } else {
            Vec::new()
        },
        ..ValidationSettings::default()
    }
}

fn all_cases() -> Vec<Case> {
    let mut out = Vec::new();
    for bits in 0..32u32 {
        let b = |i: u32| bits & (1 << i) != 0;
        out.push(Case { confident: b(0), rule_agrees: b(1), crown: b(2), auto: b(3), keep: b(4) });
    }
    out
}

#[tokio::test]
async fn routing_truth_table() {
    for c in all_cases() {
        let store = Store::in_memory();
        store.put_settings(case_settings(c)).unwrap();
        store.ingest_snapshot(&case_snapshot(c), None, t0()).unwrap();
        let llm = StubLlm::fixed(c.keep, if c.confident { 0.8 } else { 0.3 });
        let report = scheduler_tick(&store, &llm, t0()).await.unwrap();
        assert_eq!(report.completed, 1, "{c:?}");
        let item = &store.items()[0];
        assert_eq!(item.status, ItemStatus::Complete);
        assert_eq!(item.final_decision, Some(expected(c)), "{c:?}: {:?}", item.routed_reason);
        assert_eq!(llm.calls(), if c.auto { 0 } else { 3 }, "{c:?}");
        // the edge status in the next graph version follows the decision
        let (_, g) = store.graph(None).unwrap();
        assert_eq!(g.edges()[0].validation_status, expected(c).edge_status());
    }
}

#[tokio::test]
async fn vpn_dependency_needs_higher_confidence() {
    let build = |class: Option<&str>| {
        let mut dep = AssetNode::new("vpn", NodeKind::Service);
        if let Some(c) = class {
            dep = dep.with_attribute("dependency_class", c);
        }
        let g = build_graph(
            vec![AssetNode::new("app", NodeKind::Asset), dep],
            vec![DependencyEdge::new("app", "vpn", Relation::DependsOn, 0.4)],
        )
        .unwrap();
        SnapshotDocument::from_graph(&g, t0())
    };
    for (class, want) in [(Some("vpn_service"), FinalDecision::NeedsReview), (Some("cloud_connection"), FinalDecision::NeedsReview), (None, FinalDecision::Approved)] {
        let store = Store::in_memory();
        store.ingest_snapshot(&build(class), None, t0()).unwrap();
        scheduler_tick(&store, &StubLlm::fixed(true, 0.65), t0()).await.unwrap();
        assert_eq!(store.items()[0].final_decision, Some(want), "{class:?}");
    }
}

#[tokio::test]
async fn cache_prevents_duplicate_calls() {
    let c = Case { confident: true, rule_agrees: true, crown: false, auto: false, keep: true };
    let store = Store::in_memory();
    let llm = StubLlm::fixed(true, 0.9);
    store.ingest_snapshot(&case_snapshot(c), None, t0()).unwrap();
    scheduler_tick(&store, &llm, t0()).await.unwrap();
    assert_eq!(llm.calls(), 3);
    // the same edge arrives again in a later snapshot
    store.ingest_snapshot(&case_snapshot(c), None, t0()).unwrap();
    let r = scheduler_tick(&store, &llm, t0()).await.unwrap();
    assert_eq!((r.completed, r.cache_hits), (1, 1));
    assert_eq!(llm.calls(), 3);
    // different settings are a different cache entry
    store.put_settings(ValidationSettings { votes_per_item: 5, ..ValidationSettings::default() }).unwrap();
    store.ingest_snapshot(&case_snapshot(c), None, t0()).unwrap();
    scheduler_tick(&store, &llm, t0()).await.unwrap();
    assert_eq!(llm.calls(), 8);
}

fn fan_snapshot(n: usize) -> SnapshotDocument {
    let mut nodes = vec![AssetNode::new("hub", NodeKind::Asset)];
    let mut edges = Vec::new();
    for i in 0..n {
        let id = format!("svc{i}");
        nodes.push(AssetNode::new(&id, NodeKind::Service).with_attribute("ports", "443"));
        edges.push(DependencyEdge::new("hub", &id, Relation::ConnectsTo, 0.5));
    }
    SnapshotDocument::from_graph(&build_graph(nodes, edges).unwrap(), t0())
}

#[tokio::test]
async fn enqueue_then_claim_marks_processing() {
    let store = Store::in_memory();
    store.ingest_snapshot(&fan_snapshot(1), None, t0()).unwrap();
    let batch = store.claim_batch(1, t0()).unwrap();
    assert_eq!(batch.len(), 1);
    assert_eq!(batch[0].status, ItemStatus::Processing);
    assert_eq!(store.item(batch[0].id).unwrap().status, ItemStatus::Processing);
    assert!(store.claim_batch(1, t0()).unwrap().is_empty());
}

#[tokio::test]
async fn empty_queue_and_batch_limits() {
    let store = Store::in_memory();
    let llm = StubLlm::approve_all();
    assert_eq!(scheduler_tick(&store, &llm, t0()).await.unwrap().claimed, 0);
    store.ingest_snapshot(&fan_snapshot(5), None, t0()).unwrap();
    let r = scheduler_tick(&store, &llm, t0()).await.unwrap();
    assert_eq!((r.claimed, r.completed), (5, 5));
    assert!(store.items().iter().all(|i| i.status == ItemStatus::Complete));
    assert_eq!(scheduler_tick(&store, &llm, t0()).await.unwrap().claimed, 0);

    // settings are re-read every tick
    store.put_settings(ValidationSettings { batch_size: 2, ..ValidationSettings::default() }).unwrap();
    store.ingest_snapshot(&fan_snapshot(7), None, t0()).unwrap();
    assert_eq!(scheduler_tick(&store, &llm, t0()).await.unwrap().claimed, 2);
}

#[tokio::test]
async fn endpoint_failure_is_isolated_and_backed_off() {
    let store = Store::in_memory();
    store.ingest_snapshot(&fan_snapshot(5), None, t0()).unwrap();
    let flaky = StubLlm::from_fn(|prompt, _| {
        if prompt.contains("svc3") {
            Err(LlmError::Unreachable("connection refused".into()))
        } else {
            Ok(r#"{"valid": true, "confidence": 0.9}"#.into())
        }
    });
    let r = scheduler_tick(&store, &flaky, t0()).await.unwrap();
    assert_eq!((r.completed, r.deferred), (4, 1));
    let stuck: Vec<_> = store.items().into_iter().filter(|i| i.status != ItemStatus::Complete).collect();
    assert_eq!(stuck.len(), 1);
    assert_eq!(stuck[0].status, ItemStatus::Pending);
    assert_eq!(stuck[0].next_attempt_at, Some(t0() + Duration::seconds(5)));
    assert!(stuck[0].last_error.as_deref().unwrap().contains("unreachable"));

    // not due yet
    assert_eq!(scheduler_tick(&store, &flaky, t0() + Duration::seconds(4)).await.unwrap().claimed, 0);
    // second failure doubles the delay
    let at = t0() + Duration::seconds(5);
    scheduler_tick(&store, &flaky, at).await.unwrap();
    assert_eq!(store.item(stuck[0].id).unwrap().next_attempt_at, Some(at + Duration::seconds(10)));
    // endpoint recovers
    let r = scheduler_tick(&store, &StubLlm::approve_all(), at + Duration::seconds(10)).await.unwrap();
    assert_eq!(r.completed, 1);
    assert_eq!(pipeline_stats(&store).pending, 0);
}

#[tokio::test]
async fn malformed_vote_degrades_to_parse_failure() {
    let store = Store::in_memory();
    store.ingest_snapshot(&fan_snapshot(1), None, t0()).unwrap();
    let llm = StubLlm::from_fn(|_, vote| {
        Ok(if vote == 1 { "I am not sure.".into() } else { r#"{"valid": true, "confidence": 0.9}"#.into() })
    });
    scheduler_tick(&store, &llm, t0()).await.unwrap();
    let item = &store.items()[0];
    assert_eq!(item.llm_verdicts.len(), 3);
    assert_eq!(item.llm_verdicts[1].reasoning, "parse failure");
    assert!(!item.llm_verdicts[1].valid);
    assert_eq!(item.final_decision, Some(FinalDecision::Approved));
}

#[tokio::test]
async fn human_decision_is_terminal_and_audited() {
    let c = Case { confident: true, rule_agrees: false, crown: false, auto: false, keep: true };
    let store = Store::in_memory();
    store.ingest_snapshot(&case_snapshot(c), None, t0()).unwrap();
    scheduler_tick(&store, &StubLlm::fixed(true, 0.9), t0()).await.unwrap();
    let queue = store.review_queue();
    assert_eq!(queue.len(), 1);
    assert!(queue[0].routed_reason.as_deref().unwrap().contains("rule=remove but LLM=keep"));
    let (before, _) = store.graph(None).unwrap();

    let id = queue[0].id;
    store.record_human_decision(id, HumanDecision::Approve, "alice", t0()).unwrap();
    assert!(store.review_queue().is_empty());
    let (after, g) = store.graph(None).unwrap();
    assert!(after > before, "decision materializes a new version");
    assert_eq!(g.edges()[0].validation_status, ValidationStatus::HumanApproved);
    // the earlier version is untouched
    let (_, old) = store.graph(Some(before)).unwrap();
    assert_eq!(old.edges()[0].validation_status, ValidationStatus::UnderReview);

    let audit = store.audit();
    assert_eq!(audit.len(), 1);
    assert_eq!(audit[0].reviewer, "alice");
    assert_eq!(audit[0].prior_final, Some(FinalDecision::NeedsReview));
    assert_eq!(audit[0].prior_llm_verdicts.len(), 3);

    let again = store.record_human_decision(id, HumanDecision::Reject, "bob", t0());
    assert!(matches!(again, Err(ValidationError::Conflict(_))));
    assert!(matches!(store.record_human_decision(999, HumanDecision::Reject, "bob", t0()), Err(ValidationError::NotFound(_))));
    assert_eq!(store.audit().len(), 1);
}

#[tokio::test]
async fn stats_over_completed_items() {
    let store = Store::in_memory();
    let s = pipeline_stats(&store);
    assert_eq!(s.total, 0);
    assert!(s.validity_rate.is_none() && s.mean_confidence.is_none() && s.disagreement_rate.is_none());

    store.ingest_snapshot(&fan_snapshot(10), None, t0()).unwrap();
    let llm = StubLlm::from_fn(|p, _| {
        Ok(if p.contains("svc7") { r#"{"valid": true, "confidence": 0.3}"# } else { r#"{"valid": true, "confidence": 0.9}"# }.into())
    });
    scheduler_tick(&store, &llm, t0()).await.unwrap();
    let s = pipeline_stats(&store);
    assert_eq!(s.completed, 10);
    assert!((s.disagreement_rate.unwrap() - 0.1).abs() < 1e-12);
    assert!((s.validity_rate.unwrap() - 0.9).abs() < 1e-12);

    let store = Store::in_memory();
    store.ingest_snapshot(&fan_snapshot(4), None, t0()).unwrap();
    scheduler_tick(&store, &StubLlm::fixed(true, 0.9), t0()).await.unwrap();
    let s = pipeline_stats(&store);
    assert_eq!(s.validity_rate, Some(1.0));
    assert!((s.mean_confidence.unwrap() - 0.9).abs() < 1e-12);
}

#[tokio::test]
async fn pipeline_is_a_function_of_inputs() {
    let run = || async {
        let store = Store::in_memory();
        store.ingest_snapshot(&fan_snapshot(6), None, t0()).unwrap();
        let llm = StubLlm::from_fn(|p, v| {
            let valid = !p.contains("svc2");
            Ok(format!(r#"{{"valid": {valid}, "confidence": 0.{}}}"#, 6 + v))
        });
        scheduler_tick(&store, &llm, t0()).await.unwrap();
        (store.items(), store.graph(None).unwrap().1)
    };
    assert_eq!(run().await, run().await);
}

#[test]
fn idempotency_key_replays_and_rejects_reuse() {
    let store = Store::in_memory();
    let a = store.ingest_snapshot(&fan_snapshot(2), Some("k1"), t0()).unwrap();
    let b = store.ingest_snapshot(&fan_snapshot(2), Some("k1"), t0()).unwrap();
    assert_eq!(a.version, b.version);
    assert!(b.replayed);
    assert_eq!(store.items().len(), 2);
    assert!(matches!(store.ingest_snapshot(&fan_snapshot(3), Some("k1"), t0()), Err(ValidationError::Conflict(_))));
}

#[test]
fn settings_guard() {
    let store = Store::in_memory();
    let bad = ValidationSettings { votes_per_item: 2, ..ValidationSettings::default() };
    assert!(matches!(store.put_settings(bad), Err(ValidationError::InvalidInput(_))));
    assert_eq!(store.settings(), ValidationSettings::default());
}

//! Parse/serialize round-trip over a 50-document corpus.

use pqready_core::snapshot::{parse_snapshot, serialize_snapshot};
use pqready_core::synth::{generate, GenSpec};
use serde_json::json;

fn corpus() -> Vec<Vec<u8>> {
    let mut docs = Vec::new();
    for seed in 0..30 {
        let spec = GenSpec {
            nodes: 5 + (seed as usize % 20),
            acyclic: seed % 3 != 0,
            ..GenSpec::default().with_seed(seed)
        };
        docs.push(serialize_snapshot(&generate(&spec).unwrap()));
    }
    let base = |nodes: serde_json::Value, edges: serde_json::Value| {
        json!({"format_version": "1.0", "generated_at": "2025-03-01T12:00:00Z", "nodes": nodes, "edges": edges})
    };
    let node = |id: &str| json!({"id": id, "kind": "asset", "resistance": 0.2, "business_weight": 0.5});
    let mut adversarial = vec![
        base(json!([]), json!([])),
        base(json!([node("a"), node("a")]), json!([])),
        base(json!([{"id": "ключ-🔑", "kind": "key", "label": "証明書 ✓", "resistance": 0.0, "business_weight": 1.0}]), json!([])),
        base(json!([{"id": "big", "kind": "cve", "resistance": 1e300, "business_weight": -1e-300, "crown_impact": 5e-324}]), json!([])),
        base(json!([node("a"), node("b")]), json!([{"source": "a", "target": "b", "relation": "USES", "exploitability": 0.1, "validation_status": "human_approved", "provenance": "nmap", "ticket": {"id": 7}}])),
        base(json!([node("a")]), json!([{"source": "a", "target": "ghost", "relation": "TRUSTS", "exploitability": 2.5}])),
        json!({"format_version": "2.0-draft", "generated_at": "1999-12-31T23:59:59.999999Z", "nodes": [], "vendor": {"nested": [1, 2, {"x": null}]}}),
        base(json!([{"id": "x", "kind": "ip", "resistance": 0.1, "business_weight": 0.3, "attributes": {"": "empty key", "tab\there": "quote\"d"}}]), json!([])),
        base(json!([{"id": "y", "kind": "risk_cluster", "resistance": 0.123456789012345678, "business_weight": 0.1, "domains": ["zz", "aa"], "algorithms": ["RSA-2048", "ML-KEM-768"]}]), json!([])),
        json!({"format_version": "1.0", "generated_at": "2025-01-01T00:00:00+02:00", "provenance": {"a": ["nmap", "ct-log"]}}),
    ];
    for i in 0..10 {
        adversarial.push(base(
            json!([{"id": format!("n{i}"), "kind": "service", "resistance": (i as f64) / 9.0, "business_weight": 1.0 / (i as f64 + 3.0), "is_entry": i % 2 == 0}]),
            json!([]),
        ));
    }
    docs.extend(adversarial.into_iter().map(|v| serde_json::to_vec(&v).unwrap()));
    docs
}

#[test]
fn corpus_round_trips() {
    let docs = corpus();
    assert_eq!(docs.len(), 50);
    for (i, bytes) in docs.iter().enumerate() {
        let doc = parse_snapshot(bytes).unwrap_or_else(|e| panic!("doc {i}: {e}"));
        let canonical = serialize_snapshot(&doc);
        let again = parse_snapshot(&canonical).unwrap();
        assert_eq!(again, doc, "doc {i}");
        assert_eq!(serialize_snapshot(&again), canonical, "doc {i}");
    }
}

#[test]
fn adversarial_documents_fail_at_graph_build() {
    let docs = corpus();
    // duplicate ids, out-of-range values and dangling edges parse but do not build
    for i in [31, 33, 35] {
        let doc = parse_snapshot(&docs[i]).unwrap();
        assert!(doc.to_graph().is_err(), "doc {i}");
    }
    let unicode = parse_snapshot(&docs[32]).unwrap();
    assert_eq!(unicode.to_graph().unwrap().node_count(), 1);
}

#[test]
fn timestamps_are_canonicalized_to_utc() {
    let doc = parse_snapshot(br#"{"format_version":"1.0","generated_at":"2025-01-01T00:00:00+02:00"}"#).unwrap();
    let text = String::from_utf8(serialize_snapshot(&doc)).unwrap();
    assert!(text.contains("2024-12-31T22:00:00Z"), "{text}");
}

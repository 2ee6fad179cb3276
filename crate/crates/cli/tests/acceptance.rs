//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines always reach
//! stdout. The process fails when a criterion fails unless that failure is
//! listed in `KNOWN_UNATTAINABLE` together with the reason.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use pqready_core::exposure::{exposure, pqri};
use pqready_core::graph::build_graph;
use pqready_core::shapley::{default_permutations, shapley_exact, shapley_from_table, shapley_mc};
use pqready_core::snapshot::{serialize_snapshot, SnapshotDocument};
use pqready_core::synth::{
    experiment_correlation, experiment_random_bumps, generate, generate_disjoint_paths, generate_graph, mc_compromise,
    readiness_sweep, DisjointSpec, GenSpec, ParameterKind,
};
use pqready_core::*;
use pqready_server::{router, AppState, ServerConfig};
use pqready_validation::{
    scheduler_tick, AutoApproveRule, FinalDecision, Store, StubLlm, ValidationSettings,
};

/// Criteria whose failure is expected and analysed in the decisions ledger.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "monotone_sensitivity",
    "path exposure is an impact-weighted mean over crown jewels, so dE/dI_c = (q_c - E)/sum(I) < 0 for below-average crowns",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("shapley_efficiency", shapley_efficiency),
        ("oracle_equivalence", oracle_equivalence),
        ("katz_series_identity", katz_series_identity),
        ("backend_consistency", backend_consistency),
        ("monotone_sensitivity", monotone_sensitivity),
        ("hand_check_fixtures", hand_check_fixtures),
        ("pipeline_routing_truth_table", pipeline_routing),
        ("normalization_bounds", normalization_bounds),
        ("api_contract", api_contract),
    ];
    let mut unexpected = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let out = run();
        let secs = t.elapsed().as_secs_f64();
        let known = KNOWN_UNATTAINABLE.iter().find(|(n, _)| *n == name);
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name} ({secs:.1}s): {}", out.detail);
        match (out.pass, known) {
            (false, Some((_, why))) => println!("     expected failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("     note: listed as unattainable but passed"),
            (true, None) => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn cfg(graph: &AssetGraph, mode: Mode) -> ScoringConfig {
    ScoringConfig::from_graph(graph).unwrap().with_mode(mode)
}

/// 20 snapshots with n ≤ 60 and |D| ≤ 6: exact Shapley sums to E(D) within
/// 1e-9, Monte Carlo with M = 10·|D|² permutations (floored at the library
/// minimum) lands within 3 SE of exact per domain, all in 60 s.
fn shapley_efficiency() -> Outcome {
    let t = Instant::now();
    let (mut worst_gap, mut mc_total, mut mc_within) = (0.0f64, 0, 0);
    let (mut domain_counts, mut exposed) = (Vec::new(), 0);
    for seed in 0..20u64 {
        let spec = GenSpec {
            nodes: 20 + (seed as usize * 2),
            density: 0.05,
            domains: 2 + (seed as usize % 5),
            ..GenSpec::default().with_seed(seed)
        };
        let g = generate_graph(&spec).unwrap();
        let c = cfg(&g, Mode::ExactPaths);
        domain_counts.push(c.domains.len());
        let e = exposure(&g, c.domains.full(), &c).unwrap();
        exposed += usize::from(e > 0.0);
        let exact = shapley_exact(&g, &c).unwrap();
        let sum: f64 = exact.phi.values().sum();
        worst_gap = worst_gap.max((sum - e).abs());

        let m = default_permutations(c.domains.len());
        let mc = shapley_mc(&g, &c, m, seed).unwrap();
        let se = mc.standard_errors.as_ref().unwrap();
        for (d, phi) in &exact.phi {
            mc_total += 1;
            if (mc.phi[d] - phi).abs() <= 3.0 * se[d] + 1e-12 {
                mc_within += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst_gap <= 1e-9 && mc_within == mc_total && secs <= 60.0 && exposed > 0;
    Outcome::new(
        pass,
        format!(
            "max |sum phi - E(D)| = {worst_gap:.2e}; MC within 3 SE on {mc_within}/{mc_total} domains; {exposed}/20 graphs exposed; |D| in {:?}; {secs:.1}s",
            (domain_counts.iter().min().unwrap(), domain_counts.iter().max().unwrap())
        ),
    )
}

/// 100 node-disjoint-path graphs with n ≤ 12: |E_E(D) − oracle(10⁵)| ≤ 3 SE in ≥ 95.
fn oracle_equivalence() -> Outcome {
    let (mut within, mut max_n) = (0, 0);
    for seed in 0..100u64 {
        let g = generate_disjoint_paths(&DisjointSpec { chains: 1 + (seed % 3) as usize, max_interior: 2, seed }).unwrap();
        max_n = max_n.max(g.node_count());
        let c = cfg(&g, Mode::ExactPaths);
        let e = exposure(&g, c.domains.full(), &c).unwrap();
        let est = mc_compromise(&g, &c, 100_000, 10_000 + seed).unwrap();
        if (e - est.estimate).abs() <= 3.0 * est.standard_error {
            within += 1;
        }
    }
    Outcome::new(within >= 95 && max_n <= 12, format!("{within}/100 within 3 SE; largest graph {max_n} nodes"))
}

/// Dense W_S straight from the definition: W_uv = p_uv (1 − R_v) w_v m_v(S),
/// parallel edges collapsed to the max p, rejected edges dropped.
fn dense_w(graph: &AssetGraph, c: &ScoringConfig) -> (Vec<NodeId>, Vec<Vec<f64>>) {
    let ids: Vec<NodeId> = graph.nodes().map(|n| n.id.clone()).collect();
    let pos: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut w = vec![vec![0.0f64; ids.len()]; ids.len()];
    for e in graph.edges().iter().filter(|e| e.validation_status != ValidationStatus::Rejected) {
        let v = graph.node(&e.target).unwrap();
        let member = v.domains.iter().any(|d| c.domains.index_of(d).is_some());
        if member {
            let x = e.exploitability * (1.0 - v.resistance) * v.business_weight;
            let cell = &mut w[pos[&e.source]][pos[&e.target]];
            *cell = cell.max(x);
        }
    }
    (ids, w)
}

/// 50 random graphs, half cyclic: direct-solve E_A equals Σ_{k≤K} αᵏ aᵀWᵏb within 1e-8.
fn katz_series_identity() -> Outcome {
    let (mut worst, mut cyclic) = (0.0f64, 0);
    for seed in 0..50u64 {
        let acyclic = seed % 2 == 0;
        let g = generate_graph(&GenSpec { nodes: 12 + (seed as usize % 30), density: 0.08, acyclic, ..GenSpec::default().with_seed(seed) }).unwrap();
        cyclic += usize::from(!acyclic);
        let c = cfg(&g, Mode::Katz);
        let report = score(&g, &c, AttributionMethod::Exact).unwrap();
        let alpha = report.katz.as_ref().unwrap().alpha;
        let direct = exposure(&g, c.domains.full(), &c).unwrap();

        let (ids, w) = dense_w(&g, &c);
        let n = ids.len();
        let a: Vec<f64> = ids.iter().map(|id| if c.entry_nodes.contains(id) { 1.0 } else { 0.0 }).collect();
        let mut x: Vec<f64> = ids.iter().map(|id| c.crown_jewels.get(id).copied().unwrap_or(0.0)).collect();
        let mut series = 0.0;
        for _ in 0..=200 {
            series += a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>();
            x = (0..n).map(|i| alpha * (0..n).map(|j| w[i][j] * x[j]).sum::<f64>()).collect();
        }
        worst = worst.max((direct - series).abs());
    }
    Outcome::new(worst <= 1e-8, format!("max |direct - series| = {worst:.2e} over 50 graphs ({cyclic} cyclic)"))
}

/// Spearman(E_E, E_A) ≥ 0.8 over 50 generated DAG snapshots.
fn backend_consistency() -> Outcome {
    let specs = readiness_sweep(&GenSpec::default());
    let seeds: Vec<u64> = (0..10).collect();
    let r = experiment_correlation(&specs, &seeds, Execution::default()).unwrap();
    match r.spearman {
        Some(rho) => Outcome::new(rho >= 0.8 && r.graphs == 50, format!("spearman {rho:.4} over {} DAG snapshots (5 readiness levels x 10 seeds)", r.graphs)),
        None => Outcome::new(false, "spearman undefined: constant scores"),
    }
}

/// 1,000 randomized single-parameter bumps on both backends: no violation of
/// ∂E/∂R_v ≤ 0 or ∂E/∂p_uv ≥ 0, and ∂E/∂I_c ≥ 0 where |C| ≥ 2.
fn monotone_sensitivity() -> Outcome {
    let graphs: Vec<AssetGraph> = (0..20u64)
        .map(|s| generate_graph(&GenSpec { nodes: 20, crown_fraction: 0.15, ..GenSpec::default().with_seed(s) }).unwrap())
        .collect();
    let r = experiment_random_bumps(&graphs, 1000, 7, 1e-3, Execution::default()).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for backend in [Backend::ExactPaths, Backend::Katz] {
        for kind in [ParameterKind::Resistance, ParameterKind::Exploitability, ParameterKind::Impact] {
            let t = r.tally(backend, kind);
            pass &= t.violations == 0;
            let b = if backend == Backend::Katz { "katz" } else { "exact" };
            let k = match kind {
                ParameterKind::Resistance => "R",
                ParameterKind::Exploitability => "p",
                ParameterKind::Impact => "I",
            };
            parts.push(format!("{b}/{k} {}/{}", t.violations, t.checked));
        }
    }
    Outcome::new(pass, format!("violations per backend/parameter: {}", parts.join(", ")))
}

/// Hand-computed values, exact to 1e-12.
fn hand_check_fixtures() -> Outcome {
    let mut errs = Vec::new();

    let g = build_graph(
        vec![
            AssetNode::new("a", NodeKind::Ip).entry().with_domain("d"),
            AssetNode::new("c", NodeKind::Asset).with_resistance(0.5).with_impact(1.0).with_domain("d"),
        ],
        vec![DependencyEdge::new("a", "c", Relation::ConnectsTo, 0.5)],
    )
    .unwrap();
    let c = cfg(&g, Mode::ExactPaths);
    let e = exposure(&g, c.domains.full(), &c).unwrap();
    errs.push(("one-edge E_E = 0.25", (e - 0.25).abs()));

    let chain = build_graph(
        vec![
            AssetNode::new("a", NodeKind::Ip).entry().with_weight(1.0).with_domain("d"),
            AssetNode::new("m", NodeKind::Service).with_weight(1.0).with_domain("d"),
            AssetNode::new("c", NodeKind::Asset).with_weight(1.0).with_impact(1.0).with_domain("d"),
        ],
        vec![
            DependencyEdge::new("a", "m", Relation::ConnectsTo, 1.0),
            DependencyEdge::new("m", "c", Relation::DependsOn, 1.0),
        ],
    )
    .unwrap();
    for alpha in [None, Some(0.3)] {
        let c = cfg(&chain, Mode::Katz).with_alpha(alpha);
        let report = score(&chain, &c, AttributionMethod::Exact).unwrap();
        let a = report.katz.as_ref().unwrap().alpha;
        errs.push(("chain E_A = alpha^2", (report.raw_exposure - a * a).abs()));
    }

    let phi = shapley_from_table(&[0.0, 0.3, 0.4, 0.6]);
    errs.push(("shapley phi_1 = 0.25", (phi[0] - 0.25).abs()));
    errs.push(("shapley phi_2 = 0.35", (phi[1] - 0.35).abs()));
    errs.push(("PQRI(0.25) = 75", (pqri(0.25) - 75.0).abs()));

    let worst = errs.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let failing: Vec<&str> = errs.iter().filter(|(_, d)| *d > 1e-12).map(|(n, _)| *n).collect();
    Outcome::new(
        failing.is_empty(),
        if failing.is_empty() { format!("{} checks, max error {worst:.1e}", errs.len()) } else { format!("off: {}", failing.join("; ")) },
    )
}

fn t0() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap()
}

/// Every combination of {confident, rule agrees, crown endpoint, auto-approve,
/// LLM stance} lands in the specified final state through the real pipeline,
/// and a repeated edge never triggers a second round of LLM calls.
fn pipeline_routing() -> Outcome {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let mut correct = 0;
        let mut calls_ok = true;
        for bits in 0..32u32 {
            let b = |i: u32| bits & (1 << i) != 0;
            let (confident, agrees, crown, auto, keep) = (b(0), b(1), b(2), b(3), b(4));
            let want = if auto {
                FinalDecision::AutoApproved
            } else if !confident || !agrees || crown {
                FinalDecision::NeedsReview
            } else if keep {
                FinalDecision::Approved
            } else {
                FinalDecision::Rejected
            };
            // DEPENDS_ON passes the rule only for service/asset targets
            let kind = if agrees == keep { NodeKind::Service } else { NodeKind::Key };
            let g = build_graph(
                vec![
                    AssetNode::new("app", NodeKind::Asset).with_weight(0.5),
                    AssetNode::new("dep", kind).with_weight(if crown { 0.95 } else { 0.5 }),
                ],
                vec![DependencyEdge::new("app", "dep", Relation::DependsOn, 0.6)],
            )
            .unwrap();
            let store = Store::in_memory();
            let rules = if auto { vec![AutoApproveRule { relation: Relation::DependsOn, min_probability: 0.5 }] } else { Vec::new() };
            store.put_settings(ValidationSettings { auto_approve_rules: rules, ..ValidationSettings::default() }).unwrap();
            let doc = SnapshotDocument::from_graph(&g, t0());
            store.ingest_snapshot(&doc, None, t0()).unwrap();
            let llm = StubLlm::fixed(keep, if confident { 0.8 } else { 0.3 });
            scheduler_tick(&store, &llm, t0()).await.unwrap();
            if store.items()[0].final_decision == Some(want) {
                correct += 1;
            }
            let first = llm.calls();
            calls_ok &= first == if auto { 0 } else { 3 };
            // same edge again: served from the cache
            store.ingest_snapshot(&doc, None, t0()).unwrap();
            scheduler_tick(&store, &llm, t0()).await.unwrap();
            calls_ok &= llm.calls() == first;
        }
        Outcome::new(
            correct == 32 && calls_ok,
            format!("{correct}/32 routing cases correct; {} duplicate LLM calls", if calls_ok { "no" } else { "found" }),
        )
    })
}

/// Ê ∈ [0, 1] and PQRI ∈ [0, 100] over a mixed corpus; all R_v = 0.95 beats
/// all R_v = 0 on the same topology.
fn normalization_bounds() -> Outcome {
    let mut corpus = Vec::new();
    for seed in 0..40u64 {
        corpus.push(generate_graph(&GenSpec { nodes: 15 + seed as usize, acyclic: seed % 3 != 0, ..GenSpec::default().with_seed(seed) }).unwrap());
    }
    for spec in readiness_sweep(&GenSpec::default()) {
        corpus.push(generate_graph(&spec.with_seed(3)).unwrap());
    }
    let (mut in_bounds, mut checked) = (0, 0);
    for g in &corpus {
        for mode in [Mode::ExactPaths, Mode::Katz] {
            let c = cfg(g, mode);
            if mode == Mode::ExactPaths && !g.edges().is_empty() && c.backend_for(g) != Backend::ExactPaths {
                continue;
            }
            let r = score(g, &c, AttributionMethod::Auto { seed: 0 }).unwrap();
            checked += 1;
            if (0.0..=1.0).contains(&r.normalized_exposure) && (0.0..=100.0).contains(&r.pqri) {
                in_bounds += 1;
            }
        }
    }
    let (mut safer, mut pairs) = (0, 0);
    for g in corpus.iter().take(20) {
        let with_r = |r: f64| g.map(|n| n.resistance = r, |_| {}).unwrap();
        for mode in [Mode::ExactPaths, Mode::Katz] {
            let (safe, weak) = (with_r(0.95), with_r(0.0));
            let ps = score(&safe, &cfg(&safe, mode), AttributionMethod::Exact).unwrap();
            let pw = score(&weak, &cfg(&weak, mode), AttributionMethod::Exact).unwrap();
            if pw.max_exposure == 0.0 {
                continue;
            }
            pairs += 1;
            if ps.pqri > pw.pqri {
                safer += 1;
            }
        }
    }
    Outcome::new(
        in_bounds == checked && safer == pairs && pairs > 0,
        format!("{in_bounds}/{checked} reports in bounds; PQRI(R=0.95) > PQRI(R=0) on {safer}/{pairs} topology/backend pairs"),
    )
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Vec<u8>>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

/// Report route deterministic between mutations; double decisions rejected;
/// the 200-node reference snapshot scores via the API in ≤ 5 s (katz).
fn api_contract() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
    rt.block_on(async {
        let store = Store::in_memory();
        let app = router(AppState::new(store.clone(), ServerConfig::default()));
        let mut notes = Vec::new();
        let mut pass = true;

        let doc = generate(&GenSpec { nodes: 200, seed: 11, ..GenSpec::default() }).unwrap();
        let (s, _) = call(&app, "POST", "/api/ingest/snapshot", Some(serialize_snapshot(&doc))).await;
        pass &= s == StatusCode::CREATED;

        let t = Instant::now();
        let (s1, a) = call(&app, "GET", "/api/score/report?mode=katz", None).await;
        let secs = t.elapsed().as_secs_f64();
        let (s2, b) = call(&app, "GET", "/api/score/report?mode=katz", None).await;
        let deterministic = s1 == StatusCode::OK && s2 == StatusCode::OK && a == b;
        pass &= deterministic && secs <= 5.0;
        notes.push(format!("200-node katz report in {secs:.2}s, repeat identical: {deterministic}"));

        // drive some edges into review, then decide one twice
        store
            .put_settings(ValidationSettings { batch_size: 50, crown_review_w: 0.0, ..ValidationSettings::default() })
            .unwrap();
        scheduler_tick(&store, &StubLlm::fixed(true, 0.9), Utc::now()).await.unwrap();
        let (_, q) = call(&app, "GET", "/api/review/queue", None).await;
        let queue: Value = serde_json::from_slice(&q).unwrap();
        match queue.as_array().and_then(|q| q.first()).and_then(|i| i["id"].as_u64()) {
            Some(id) => {
                let uri = format!("/api/review/{id}/decision");
                let body = serde_json::to_vec(&json!({ "decision": "approve", "reviewer": "acceptance" })).unwrap();
                let (first, _) = call(&app, "POST", &uri, Some(body.clone())).await;
                let (second, e) = call(&app, "POST", &uri, Some(body)).await;
                let code = serde_json::from_slice::<Value>(&e).ok().and_then(|v| v["error"]["code"].as_str().map(String::from));
                let ok = first == StatusCode::OK && second == StatusCode::CONFLICT && code.as_deref() == Some("conflict");
                pass &= ok;
                notes.push(format!("second decision -> {} {}", second.as_u16(), code.unwrap_or_default()));
            }
            None => {
                pass = false;
                notes.push("no review item produced".into());
            }
        }
        Outcome::new(pass, notes.join("; "))
    })
}

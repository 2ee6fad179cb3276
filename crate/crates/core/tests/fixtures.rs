//! Hand-evaluated fixtures.

use pqready_core::exposure::{exposure, exposure_exact, exposure_katz, pqri, readiness_delta, ReadinessDelta};
use pqready_core::graph::build_graph;
use pqready_core::shapley::{shapley_exact, shapley_from_table};
use pqready_core::*;

fn node(id: &str) -> AssetNode {
    AssetNode::new(id, NodeKind::Service).with_domain("tls").with_weight(1.0)
}

fn one_edge() -> AssetGraph {
    build_graph(
        vec![node("a").entry(), node("c").with_resistance(0.5).with_impact(1.0)],
        vec![DependencyEdge::new("a", "c", Relation::ConnectsTo, 0.5)],
    )
    .unwrap()
}

#[test]
fn one_edge_path_exposure() {
    let g = one_edge();
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::ExactPaths);
    let e = exposure_exact(&g, cfg.domains.full(), &cfg).unwrap();
    assert!((e - 0.25).abs() <= 1e-12, "{e}");
    assert_eq!(exposure_exact(&g, Coalition::EMPTY, &cfg).unwrap(), 0.0);
}

#[test]
fn two_step_chain_katz_is_alpha_squared() {
    let g = build_graph(
        vec![node("a").entry(), node("b"), node("c").with_impact(1.0)],
        vec![
            DependencyEdge::new("a", "b", Relation::DependsOn, 1.0),
            DependencyEdge::new("b", "c", Relation::DependsOn, 1.0),
        ],
    )
    .unwrap();
    for alpha in [0.3, 0.5, 0.9] {
        let cfg = ScoringConfig::from_graph(&g).unwrap().with_alpha(Some(alpha));
        let e = exposure_katz(&g, cfg.domains.full(), &cfg).unwrap();
        assert!((e - alpha * alpha).abs() <= 1e-12, "{e} vs {}", alpha * alpha);
    }
    // nilpotent W: derived α falls back to κ
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_kappa(0.5);
    assert!((exposure_katz(&g, cfg.domains.full(), &cfg).unwrap() - 0.25).abs() <= 1e-12);
}

#[test]
fn two_domain_shapley_table() {
    let phi = shapley_from_table(&[0.0, 0.3, 0.4, 0.6]);
    assert!((phi[0] - 0.25).abs() <= 1e-12);
    assert!((phi[1] - 0.35).abs() <= 1e-12);
}

#[test]
fn pqri_and_delta() {
    assert!((pqri(0.25) - 75.0).abs() <= 1e-12);
    assert_eq!(pqri(0.0), 100.0);
    assert_eq!(pqri(1.0), 0.0);
    match readiness_delta(0.3, 0.4) {
        ReadinessDelta::Change(d) => assert!((d + 0.25).abs() <= 1e-12),
        other => panic!("{other:?}"),
    }
    assert_eq!(readiness_delta(0.4, 0.4), ReadinessDelta::Change(0.0));
    assert_eq!(readiness_delta(0.2, 0.0), ReadinessDelta::NewlyExposed);
}

#[test]
fn coalition_fraction_scales_path() {
    // a(tls) → m(storage) → c(tls): χ_{tls} = 2/3
    let g = build_graph(
        vec![
            node("a").entry(),
            AssetNode::new("m", NodeKind::Key).with_domain("storage"),
            node("c").with_impact(1.0),
        ],
        vec![
            DependencyEdge::new("a", "m", Relation::Uses, 1.0),
            DependencyEdge::new("m", "c", Relation::Stores, 1.0),
        ],
    )
    .unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::ExactPaths);
    let tls = cfg.domains.coalition(["tls"]).unwrap();
    let storage = cfg.domains.coalition(["storage"]).unwrap();
    assert!((exposure(&g, tls, &cfg).unwrap() - 2.0 / 3.0).abs() <= 1e-12);
    assert!((exposure(&g, storage, &cfg).unwrap() - 1.0 / 3.0).abs() <= 1e-12);
    assert!((exposure(&g, cfg.domains.full(), &cfg).unwrap() - 1.0).abs() <= 1e-12);
    let attr = shapley_exact(&g, &cfg).unwrap();
    let sum: f64 = attr.phi.values().sum();
    assert!((sum - 1.0).abs() <= 1e-12);
}

#[test]
fn two_crowns_weighted_by_impact() {
    // c1 reached w.p. 0.5, c2 w.p. 1; E = (0.2·0.5 + 0.6·1)/0.8
    let g = build_graph(
        vec![node("a").entry(), node("c1").with_impact(0.2), node("c2").with_impact(0.6)],
        vec![
            DependencyEdge::new("a", "c1", Relation::ConnectsTo, 0.5),
            DependencyEdge::new("a", "c2", Relation::ConnectsTo, 1.0),
        ],
    )
    .unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::ExactPaths);
    let e = exposure(&g, cfg.domains.full(), &cfg).unwrap();
    assert!((e - 0.7 / 0.8).abs() <= 1e-12);
}

#[test]
fn rejected_edges_do_not_score() {
    let mut g = one_edge();
    let key = g.edges()[0].key();
    g = g.with_edge_statuses(&[(key, ValidationStatus::Rejected)].into_iter().collect());
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::ExactPaths);
    assert_eq!(exposure(&g, cfg.domains.full(), &cfg).unwrap(), 0.0);
}

#[test]
fn path_cap_suggests_katz() {
    // layered DAG with 4^6 = 4096 entry→crown paths
    let mut nodes = vec![node("a").entry(), node("c").with_impact(1.0)];
    let mut edges = Vec::new();
    let mut prev = vec!["a".to_string()];
    for layer in 0..6 {
        let ids: Vec<String> = (0..4).map(|i| format!("l{layer}_{i}")).collect();
        for id in &ids {
            nodes.push(node(id));
            for p in &prev {
                edges.push(DependencyEdge::new(p, id, Relation::DependsOn, 0.9));
            }
        }
        prev = ids;
    }
    for p in &prev {
        edges.push(DependencyEdge::new(p, "c", Relation::DependsOn, 0.9));
    }
    let g = build_graph(nodes, edges).unwrap();
    let mut cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::ExactPaths);
    cfg.path_cap = 1000;
    let err = exposure(&g, cfg.domains.full(), &cfg).unwrap_err();
    assert!(matches!(err, CoreError::PathExplosion { cap: 1000 }));
    assert!(err.to_string().contains("katz"));
    cfg.path_cap = 10_000;
    assert!(exposure(&g, cfg.domains.full(), &cfg).is_ok());
}

#[test]
fn paths_longer_than_cap_are_ignored() {
    let g = build_graph(
        vec![node("a").entry(), node("b"), node("c").with_impact(1.0)],
        vec![
            DependencyEdge::new("a", "b", Relation::DependsOn, 1.0),
            DependencyEdge::new("b", "c", Relation::DependsOn, 1.0),
        ],
    )
    .unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::ExactPaths);
    assert_eq!(exposure(&g, cfg.domains.full(), &cfg.clone().with_max_path_len(2)).unwrap(), 0.0);
    assert_eq!(exposure(&g, cfg.domains.full(), &cfg.with_max_path_len(3)).unwrap(), 1.0);
}

#[test]
fn pinned_alpha_must_converge() {
    let g = build_graph(
        vec![node("a").entry(), node("b"), node("c").with_impact(1.0)],
        vec![
            DependencyEdge::new("a", "b", Relation::DependsOn, 1.0),
            DependencyEdge::new("b", "a", Relation::DependsOn, 1.0),
            DependencyEdge::new("b", "c", Relation::DependsOn, 1.0),
        ],
    )
    .unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_alpha(Some(1.5));
    assert!(matches!(exposure_katz(&g, cfg.domains.full(), &cfg), Err(CoreError::Config(_))));
}

#[test]
fn missing_node_names_ids() {
    let err = build_graph(vec![node("a")], vec![DependencyEdge::new("a", "ghost", Relation::Uses, 0.5)]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("ghost"), "{msg}");
}

#[test]
fn empty_entry_set_is_a_config_error() {
    let g = build_graph(vec![node("c").with_impact(1.0)], vec![]).unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap();
    assert!(matches!(exposure(&g, cfg.domains.full(), &cfg), Err(CoreError::Config(_))));
}

#![allow(dead_code)]

use std::collections::BTreeMap;

use pqready_core::graph::build_graph;
use pqready_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random graph with `domains` domains; every node gets at least one.
/// Node 0 is always an entry and node n−1 always a crown jewel.
pub fn random_graph(seed: u64, n: usize, density: f64, domains: usize, cyclic: bool) -> AssetGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    for i in 0..n {
        let mut node = AssetNode::new(format!("v{i}"), NodeKind::Service)
            .with_resistance(rng.random_range(0.0..1.0))
            .with_weight(rng.random_range(0.1..=1.0))
            .with_domain(&format!("d{}", rng.random_range(0..domains)));
        if rng.random::<f64>() < 0.25 {
            node = node.with_domain(&format!("d{}", rng.random_range(0..domains)));
        }
        if i == 0 || (i < n / 2 && rng.random::<f64>() < 0.2) {
            node = node.entry();
        }
        if i == n - 1 || (i > n / 2 && rng.random::<f64>() < 0.3) {
            node = node.with_impact(rng.random_range(0.1..=1.0));
        }
        nodes.push(node);
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && (cyclic || u < v) && rng.random::<f64>() < density {
                edges.push(DependencyEdge::new(&format!("v{u}"), &format!("v{v}"), Relation::DependsOn, rng.random_range(0.0..=1.0)));
            }
        }
    }
    build_graph(nodes, edges).unwrap()
}

/// Collapsed scored adjacency `u → [(v, p)]` keyed by node id.
pub fn adjacency(graph: &AssetGraph) -> BTreeMap<NodeId, BTreeMap<NodeId, f64>> {
    let mut adj: BTreeMap<NodeId, BTreeMap<NodeId, f64>> = BTreeMap::new();
    for e in graph.edges() {
        if e.validation_status == ValidationStatus::Rejected {
            continue;
        }
        let p = adj.entry(e.source.clone()).or_default().entry(e.target.clone()).or_insert(0.0);
        *p = p.max(e.exploitability);
    }
    adj
}

/// Path exposure by brute-force recursive enumeration, written from the
/// definition independently of the library's path model.
pub fn path_exposure_oracle(graph: &AssetGraph, config: &ScoringConfig, s: Coalition) -> f64 {
    let adj = adjacency(graph);
    let in_s = |id: &NodeId| {
        config
            .node_domains
            .get(id)
            .is_some_and(|ds| ds.iter().any(|d| config.domains.index_of(d).is_some_and(|i| s.contains(i))))
    };
    let mut survive: BTreeMap<NodeId, f64> = config.crown_jewels.keys().map(|c| (c.clone(), 1.0)).collect();

    fn walk(
        path: &mut Vec<NodeId>,
        prob: f64,
        graph: &AssetGraph,
        adj: &BTreeMap<NodeId, BTreeMap<NodeId, f64>>,
        config: &ScoringConfig,
        in_s: &dyn Fn(&NodeId) -> bool,
        survive: &mut BTreeMap<NodeId, f64>,
    ) {
        let last = path.last().unwrap().clone();
        if path.len() >= 2 {
            if let Some(q) = survive.get_mut(&last) {
                let chi = path.iter().filter(|v| in_s(v)).count() as f64 / path.len() as f64;
                *q *= 1.0 - prob * chi;
            }
        }
        if path.len() == config.max_path_len {
            return;
        }
        if let Some(out) = adj.get(&last) {
            for (v, p) in out {
                if path.contains(v) {
                    continue;
                }
                let r = graph.node(v).unwrap().resistance;
                path.push(v.clone());
                walk(path, prob * p * (1.0 - r), graph, adj, config, in_s, survive);
                path.pop();
            }
        }
    }
    for a in &config.entry_nodes {
        let r = graph.node(a).unwrap().resistance;
        walk(&mut vec![a.clone()], 1.0 - r, graph, &adj, config, &in_s, &mut survive);
    }
    let total: f64 = config.crown_jewels.values().sum();
    config.crown_jewels.iter().map(|(c, i)| i * (1.0 - survive[c])).sum::<f64>() / total
}

/// Dense `W_S` built directly from the definition.
pub fn dense_w(graph: &AssetGraph, config: &ScoringConfig, s: Coalition) -> (Vec<NodeId>, Vec<Vec<f64>>) {
    let ids: Vec<NodeId> = graph.nodes().map(|n| n.id.clone()).collect();
    let pos = |id: &NodeId| ids.iter().position(|x| x == id).unwrap();
    let mut w = vec![vec![0.0; ids.len()]; ids.len()];
    for (u, out) in adjacency(graph) {
        for (v, p) in out {
            let node = graph.node(&v).unwrap();
            let m = node.domains.iter().any(|d| config.domains.index_of(d).is_some_and(|i| s.contains(i)));
            if m {
                w[pos(&u)][pos(&v)] = p * (1.0 - node.resistance) * node.business_weight;
            }
        }
    }
    (ids, w)
}

/// Truncated Neumann series `Σ_{k ≤ K} αᵏ aᵀ Wᵏ b`.
pub fn katz_series(graph: &AssetGraph, config: &ScoringConfig, s: Coalition, alpha: f64, terms: usize) -> f64 {
    let (ids, w) = dense_w(graph, config, s);
    let n = ids.len();
    let mut x: Vec<f64> = ids.iter().map(|id| config.crown_jewels.get(id).copied().unwrap_or(0.0)).collect();
    let a: Vec<f64> = ids.iter().map(|id| if config.entry_nodes.contains(id) { 1.0 } else { 0.0 }).collect();
    let mut total = 0.0;
    for _ in 0..=terms {
        total += a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>();
        let next: Vec<f64> = (0..n).map(|i| alpha * (0..n).map(|j| w[i][j] * x[j]).sum::<f64>()).collect();
        x = next;
    }
    total
}

/// Shapley values by averaging marginal contributions over every ordering.
pub fn shapley_by_permutations(n: usize, value: impl Fn(u64) -> f64) -> Vec<f64> {
    fn permute(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                permute(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut orders = Vec::new();
    permute(&mut Vec::new(), n, &mut orders);
    let mut phi = vec![0.0; n];
    for order in &orders {
        let mut mask = 0u64;
        for &d in order {
            let before = value(mask);
            mask |= 1 << d;
            phi[d] += value(mask) - before;
        }
    }
    phi.iter().map(|p| p / orders.len() as f64).collect()
}

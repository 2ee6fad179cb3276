use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::{build_graph, AssetGraph, AssetNode, DependencyEdge, NodeKind, Relation};
use crate::registry::ResistanceCategory;
use crate::snapshot::SnapshotDocument;

/// Shares of nodes drawn from each resistance category; values are sampled
/// uniformly inside the category bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceMix {
    pub vulnerable: f64,
    pub transitional: f64,
    pub quantum_safe: f64,
}

impl Default for ResistanceMix {
    fn default() -> Self {
        Self {
            vulnerable: 0.5,
            transitional: 0.3,
            quantum_safe: 0.2,
        }
    }
}

impl ResistanceMix {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let total = self.vulnerable + self.transitional + self.quantum_safe;
        let x = rng.random::<f64>() * total;
        let cat = if x < self.vulnerable {
            ResistanceCategory::Vulnerable
        } else if x < self.vulnerable + self.transitional {
            ResistanceCategory::Transitional
        } else {
            ResistanceCategory::QuantumSafe
        };
        let (lo, hi) = cat.bounds();
        rng.random_range(lo..=hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub nodes: usize,
    /// Probability of each ordered node pair carrying an edge.
    pub density: f64,
    pub domains: usize,
    pub entry_fraction: f64,
    pub crown_fraction: f64,
    pub resistance: ResistanceMix,
    /// Exploitability range for generated edges.
    pub p_min: f64,
    pub p_max: f64,
    /// Orient every edge along a hidden topological order (entries first,
    /// crown jewels last).
    pub acyclic: bool,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            nodes: 30,
            density: 0.08,
            domains: 4,
            entry_fraction: 0.1,
            crown_fraction: 0.1,
            resistance: ResistanceMix::default(),
            p_min: 0.2,
            p_max: 0.9,
            acyclic: true,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::InvalidInput(m));
        if self.nodes < 3 {
            return bad(format!("nodes = {} (need at least 3)", self.nodes));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} outside (0, 1]", self.density));
        }
        for (name, f) in [("entry_fraction", self.entry_fraction), ("crown_fraction", self.crown_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name} {f} outside (0, 1)"));
            }
        }
        if self.domains == 0 || self.domains > crate::config::MAX_DOMAINS {
            return bad(format!("domains = {}", self.domains));
        }
        let m = self.resistance;
        if [m.vulnerable, m.transitional, m.quantum_safe].iter().any(|&s| s < 0.0) || m.vulnerable + m.transitional + m.quantum_safe <= 0.0 {
            return bad("resistance shares must be non-negative with a positive sum".into());
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max && self.p_max <= 1.0) {
            return bad(format!("exploitability range [{}, {}] invalid", self.p_min, self.p_max));
        }
        let entries = count_of(self.entry_fraction, self.nodes);
        let crowns = count_of(self.crown_fraction, self.nodes);
        if entries + crowns > self.nodes {
            return bad("entry and crown fractions leave no room".into());
        }
        Ok(())
    }
}

fn count_of(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).max(1)
}

/// Timestamp stamped on generated snapshots so output bytes depend only on the generator settings.
pub fn generation_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap()
}

fn domain_name(i: usize) -> String {
    format!("d{i:02}")
}

const KINDS: [NodeKind; 5] = [NodeKind::Asset, NodeKind::Service, NodeKind::Certificate, NodeKind::Key, NodeKind::Ip];
const RELATIONS: [Relation; 4] = [Relation::Uses, Relation::ConnectsTo, Relation::DependsOn, Relation::Trusts];

pub fn generate_graph(spec: &GenSpec) -> Result<AssetGraph> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nodes;
    let n_entry = count_of(spec.entry_fraction, n);
    let n_crown = count_of(spec.crown_fraction, n);

    // position in the hidden order: entries first, crowns last
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut pos = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }

    let mut nodes = Vec::with_capacity(n);
    for v in 0..n {
        let p = pos[v];
        let mut node = AssetNode::new(format!("n{v:03}"), KINDS[rng.random_range(0..KINDS.len())])
            .with_resistance(spec.resistance.sample(&mut rng))
            .with_weight(rng.random_range(0.3..=1.0))
            .with_domain(&domain_name(rng.random_range(0..spec.domains)));
        if spec.domains > 1 && rng.random::<f64>() < 0.2 {
            node = node.with_domain(&domain_name(rng.random_range(0..spec.domains)));
        }
        if p < n_entry {
            node = node.entry();
        } else if p >= n - n_crown {
            node = node.with_impact(rng.random_range(0.9..=1.0));
        }
        nodes.push(node);
    }

    let mut edges = Vec::new();
    let mut push = |rng: &mut ChaCha8Rng, u: usize, v: usize| {
        let rel = RELATIONS[rng.random_range(0..RELATIONS.len())];
        let p = rng.random_range(spec.p_min..=spec.p_max);
        edges.push(DependencyEdge::new(&format!("n{u:03}"), &format!("n{v:03}"), rel, p));
    };
    if spec.acyclic {
        // unordered pairs at twice the rate keeps E[|E|] = n(n−1)·density for density ≤ 1/2
        let q = (2.0 * spec.density).min(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < q {
                    let (u, v) = if pos[order[i]] < pos[order[j]] { (order[i], order[j]) } else { (order[j], order[i]) };
                    push(&mut rng, u, v);
                }
            }
        }
    } else {
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.random::<f64>() < spec.density {
                    push(&mut rng, u, v);
                }
            }
        }
    }
    build_graph(nodes, edges)
}

/// `base` at five readiness levels, from all-vulnerable to all-quantum-safe
/// (transitional share fixed at 0.2). Default corpus for backend correlation.
pub fn readiness_sweep(base: &GenSpec) -> Vec<GenSpec> {
    (0..5)
        .map(|i| {
            let safe = i as f64 / 4.0;
            GenSpec {
                resistance: ResistanceMix {
                    vulnerable: 1.0 - safe,
                    transitional: 0.2,
                    quantum_safe: safe,
                },
                ..base.clone()
            }
        })
        .collect()
}

pub fn generate(spec: &GenSpec) -> Result<SnapshotDocument> {
    let graph = generate_graph(spec)?;
    let mut doc = SnapshotDocument::from_graph(&graph, generation_epoch());
    for n in graph.nodes() {
        doc.provenance.insert(n.id.as_str().to_string(), vec!["synth".into()]);
    }
    Ok(doc)
}

/// Graphs whose entry→crown paths share no node except the crown jewel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointSpec {
    /// Number of independent chains (each with its own entry).
    pub chains: usize,
    /// Interior nodes per chain are drawn from `0..=max_interior`.
    pub max_interior: usize,
    pub seed: u64,
}

impl Default for DisjointSpec {
    fn default() -> Self {
        Self {
            chains: 3,
            max_interior: 2,
            seed: 0,
        }
    }
}

/// One crown jewel `c` with `R_c = 0` reached by `chains` node-disjoint
/// chains. The crown has zero resistance so its shared weakness does not
/// correlate the chains.
pub fn generate_disjoint_paths(spec: &DisjointSpec) -> Result<AssetGraph> {
    if spec.chains == 0 {
        return Err(CoreError::InvalidInput("need at least one chain".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut nodes = vec![AssetNode::new("crown", NodeKind::Asset)
        .with_impact(1.0)
        .with_weight(1.0)
        .with_domain("d00")];
    let mut edges = Vec::new();
    for k in 0..spec.chains {
        let interior = rng.random_range(0..=spec.max_interior);
        let mut prev = format!("c{k}e");
        nodes.push(
            AssetNode::new(prev.as_str(), NodeKind::Ip)
                .entry()
                .with_resistance(rng.random_range(0.0..0.6))
                .with_domain(&domain_name(rng.random_range(0..2))),
        );
        for i in 0..interior {
            let id = format!("c{k}n{i}");
            nodes.push(
                AssetNode::new(id.as_str(), NodeKind::Service)
                    .with_resistance(rng.random_range(0.0..0.6))
                    .with_domain(&domain_name(rng.random_range(0..2))),
            );
            edges.push(DependencyEdge::new(&prev, &id, Relation::ConnectsTo, rng.random_range(0.4..=1.0)));
            prev = id;
        }
        edges.push(DependencyEdge::new(&prev, "crown", Relation::DependsOn, rng.random_range(0.4..=1.0)));
    }
    build_graph(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::serialize_snapshot;

    #[test]
    fn expected_edge_count() {
        let spec = GenSpec {
            nodes: 50,
            density: 0.05,
            ..GenSpec::default()
        };
        let mean = 50.0 * 49.0 * 0.05;
        // unordered-pair sampling: 1225 trials at q = 0.1
        let sd = (1225.0f64 * 0.1 * 0.9).sqrt();
        for seed in 0..5 {
            let g = generate_graph(&spec.clone().with_seed(seed)).unwrap();
            assert!((g.edge_count() as f64 - mean).abs() <= 4.0 * sd, "seed {seed}: {}", g.edge_count());
        }
        let spec = GenSpec {
            acyclic: false,
            ..spec
        };
        let sd = (2450.0f64 * 0.05 * 0.95).sqrt();
        let g = generate_graph(&spec).unwrap();
        assert!((g.edge_count() as f64 - mean).abs() <= 4.0 * sd);
    }

    #[test]
    fn deterministic_bytes() {
        let spec = GenSpec::default().with_seed(42);
        let a = serialize_snapshot(&generate(&spec).unwrap());
        let b = serialize_snapshot(&generate(&spec).unwrap());
        assert_eq!(a, b);
        let c = serialize_snapshot(&generate(&spec.with_seed(43)).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_specs() {
        let zero_crown = GenSpec {
            crown_fraction: 0.0,
            ..GenSpec::default()
        };
        assert!(generate(&zero_crown).is_err());
        assert!(generate(&GenSpec { nodes: 2, ..GenSpec::default() }).is_err());
        assert!(generate(&GenSpec { density: 0.0, ..GenSpec::default() }).is_err());
    }

    #[test]
    fn acyclic_roles() {
        let g = generate_graph(&GenSpec::default().with_seed(7)).unwrap();
        assert!(g.nodes().any(|n| n.is_entry));
        assert!(g.nodes().any(|n| n.is_crown_jewel()));
        assert!(petgraph_is_acyclic(&g));
    }

    fn petgraph_is_acyclic(g: &AssetGraph) -> bool {
        let ids: Vec<_> = g.nodes().map(|n| n.id.clone()).collect();
        let idx = |id| ids.iter().position(|x| x == id).unwrap() as u32;
        let pg = petgraph::graph::DiGraph::<(), ()>::from_edges(g.edges().iter().map(|e| (idx(&e.source), idx(&e.target))));
        !petgraph::algo::is_cyclic_directed(&pg)
    }

    #[test]
    fn disjoint_chains() {
        let g = generate_disjoint_paths(&DisjointSpec { chains: 3, max_interior: 3, seed: 1 }).unwrap();
        for n in g.nodes().filter(|n| n.id.as_str() != "crown") {
            assert!(g.edges_from(&n.id).count() == 1);
            assert!(g.edges_to(&n.id).count() <= 1);
        }
        assert_eq!(g.nodes().filter(|n| n.is_entry).count(), 3);
    }
}

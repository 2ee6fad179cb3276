//! Monte Carlo compromise oracle.
//!
//! Each trial draws every scored edge as traversable with probability `p_uv`
//! and every node as quantum-weak with probability `1 − R_v`. A crown jewel
//! is compromised when it is reachable from a weak entry through at least one
//! traversable edge, visiting only weak nodes. The trial value is the
//! impact-weighted fraction of compromised crown jewels, so with a single
//! crown jewel the estimate is the plain compromise frequency.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScoringConfig;
use crate::error::{CoreError, Result};
use crate::graph::AssetGraph;
use crate::par::{self, Execution};

pub const MIN_ORACLE_SAMPLES: usize = 1000;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub samples: usize,
    pub standard_error: f64,
    pub seed: u64,
}

struct Trials {
    resistance: Vec<f64>,
    entries: Vec<usize>,
    impact: Vec<f64>,
    total_impact: f64,
    // (source, target, p) with parallel edges collapsed to the max p
    edges: Vec<(usize, usize, f64)>,
    out: Vec<Vec<usize>>,
}

impl Trials {
    fn new(graph: &AssetGraph, config: &ScoringConfig) -> Result<Self> {
        config.validate(graph)?;
        let ids: Vec<_> = graph.nodes().map(|n| n.id.clone()).collect();
        let index: BTreeMap<_, _> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut collapsed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in graph.edges().iter().filter(|e| e.is_scored()) {
            let p = collapsed.entry((index[&e.source], index[&e.target])).or_insert(0.0);
            *p = p.max(e.exploitability);
        }
        let edges: Vec<_> = collapsed.into_iter().map(|((u, v), p)| (u, v, p)).collect();
        let mut out = vec![Vec::new(); ids.len()];
        for (k, &(u, _, _)) in edges.iter().enumerate() {
            out[u].push(k);
        }
        let mut impact = vec![0.0; ids.len()];
        for (id, &i) in &config.crown_jewels {
            impact[index[id]] = i;
        }
        Ok(Self {
            resistance: graph.nodes().map(|n| n.resistance).collect(),
            entries: config.entry_nodes.iter().map(|id| index[id]).collect(),
            total_impact: impact.iter().sum(),
            impact,
            edges,
            out,
        })
    }

    fn run(&self, rng: &mut ChaCha8Rng, weak: &mut [bool], open: &mut [bool], seen: &mut [bool], stack: &mut Vec<usize>) -> f64 {
        for (w, r) in weak.iter_mut().zip(&self.resistance) {
            *w = rng.random::<f64>() < 1.0 - r;
        }
        for (o, e) in open.iter_mut().zip(&self.edges) {
            *o = rng.random::<f64>() < e.2;
        }
        seen.iter_mut().for_each(|s| *s = false);
        stack.clear();
        let push_successors = |u: usize, seen: &mut [bool], stack: &mut Vec<usize>| {
            for &k in &self.out[u] {
                let v = self.edges[k].1;
                if open[k] && weak[v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        };
        for &a in &self.entries {
            if weak[a] {
                push_successors(a, seen, stack);
            }
        }
        while let Some(u) = stack.pop() {
            push_successors(u, seen, stack);
        }
        let hit: f64 = seen.iter().zip(&self.impact).filter(|(s, _)| **s).map(|(_, i)| i).sum();
        hit / self.total_impact
    }
}

/// Estimates the impact-weighted compromise probability. Samples are split
/// into fixed-size chunks, each drawn from its own ChaCha stream of `seed`,
/// so the result is identical for any execution mode.
pub fn mc_compromise(graph: &AssetGraph, config: &ScoringConfig, samples: usize, seed: u64) -> Result<OracleEstimate> {
    mc_compromise_with(graph, config, samples, seed, config.execution)
}

pub fn mc_compromise_with(
    graph: &AssetGraph,
    config: &ScoringConfig,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<OracleEstimate> {
    if samples < MIN_ORACLE_SAMPLES {
        return Err(CoreError::InvalidInput(format!(
            "oracle needs at least {MIN_ORACLE_SAMPLES} samples (got {samples})"
        )));
    }
    let trials = Trials::new(graph, config)?;
    let chunks = samples.div_ceil(CHUNK);
    let sums = par::map_range(exec, chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let n = trials.resistance.len();
        let (mut weak, mut seen) = (vec![false; n], vec![false; n]);
        let mut open = vec![false; trials.edges.len()];
        let mut stack = Vec::new();
        let count = CHUNK.min(samples - c * CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let x = trials.run(&mut rng, &mut weak, &mut open, &mut seen, &mut stack);
            s += x;
            s2 += x * x;
        }
        (s, s2)
    });
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let m = samples as f64;
    let mean = s / m;
    // population variance; equals p̂(1 − p̂) for 0/1 outcomes
    let var = (s2 / m - mean * mean).max(0.0);
    Ok(OracleEstimate {
        estimate: mean.clamp(0.0, 1.0),
        samples,
        standard_error: (var / m).sqrt(),
        seed,
    })
}

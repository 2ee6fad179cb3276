//! Simple-path enumeration from entry points to crown jewels.

use serde::{Deserialize, Serialize};

use super::ScoringView;
use crate::config::{Coalition, ScoringConfig};
use crate::error::{CoreError, Result};
use crate::graph::{AssetGraph, NodeId};

/// A simple path from an entry node to a crown jewel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPath {
    pub nodes: Vec<NodeId>,
    /// `P_S(π)` for the coalition the path was scored against.
    pub probability: f64,
    /// `χ_S(π)`: share of path nodes whose domains intersect the coalition.
    pub coalition_fraction: f64,
}

/// Enumerates every simple path (no repeated node) with 2..=`max_len` nodes
/// that starts at an entry node and ends at a crown jewel. Paths are produced
/// depth-first in lexicographic order of node indices. Paths may pass
/// through other entries or crown jewels.
pub(crate) fn enumerate_raw(view: &ScoringView, max_len: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut visited = vec![false; view.len()];
    let mut stack = Vec::with_capacity(max_len);
    for start in (0..view.len()).filter(|&i| view.is_entry[i]) {
        dfs(view, start, max_len, cap, &mut visited, &mut stack, &mut out)?;
    }
    Ok(out)
}

fn dfs(
    view: &ScoringView,
    v: usize,
    max_len: usize,
    cap: usize,
    visited: &mut [bool],
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) -> Result<()> {
    visited[v] = true;
    stack.push(v);
    if stack.len() >= 2 && view.is_crown[v] {
        if out.len() >= cap {
            return Err(CoreError::PathExplosion { cap });
        }
        out.push(stack.clone());
    }
    if stack.len() < max_len {
        for &(w, _) in &view.out[v] {
            if !visited[w] {
                dfs(view, w, max_len, cap, visited, stack, out)?;
            }
        }
    }
    stack.pop();
    visited[v] = false;
    Ok(())
}

/// `∏ p_uv · ∏ (1 − R_v)` over the edges and all nodes of the path.
pub(crate) fn base_probability(view: &ScoringView, nodes: &[usize]) -> f64 {
    let edges: f64 = nodes.windows(2).map(|w| edge_p(view, w[0], w[1])).product();
    let weakness: f64 = nodes.iter().map(|&v| 1.0 - view.resistance[v]).product();
    edges * weakness
}

pub(crate) fn coalition_fraction(view: &ScoringView, nodes: &[usize], s: Coalition) -> f64 {
    let hits = nodes.iter().filter(|&&v| s.intersects(view.domain_mask[v])).count();
    hits as f64 / nodes.len() as f64
}

fn edge_p(view: &ScoringView, u: usize, v: usize) -> f64 {
    view.out[u]
        .binary_search_by_key(&v, |&(t, _)| t)
        .map(|i| view.out[u][i].1)
        .unwrap_or(0.0)
}

/// All entry→crown simple paths, scored against the full domain set.
pub fn enumerate_paths(graph: &AssetGraph, config: &ScoringConfig) -> Result<Vec<AttackPath>> {
    let view = ScoringView::new(graph, config)?;
    let full = config.domains.full();
    Ok(enumerate_raw(&view, config.max_path_len, config.path_cap)?
        .into_iter()
        .map(|p| attack_path(&view, &p, full))
        .collect())
}

pub(crate) fn attack_path(view: &ScoringView, nodes: &[usize], s: Coalition) -> AttackPath {
    let chi = coalition_fraction(view, nodes, s);
    AttackPath {
        nodes: nodes.iter().map(|&i| view.ids[i].clone()).collect(),
        probability: base_probability(view, nodes) * chi,
        coalition_fraction: chi,
    }
}

/// `P_S(π) = (∏ p_uv)(∏ (1 − R_v)) χ_S(π)`.
pub fn path_probability(path: &AttackPath, s: Coalition, graph: &AssetGraph, config: &ScoringConfig) -> Result<f64> {
    let view = ScoringView::new(graph, config)?;
    let nodes = path
        .nodes
        .iter()
        .map(|id| view.index_of(id).ok_or_else(|| CoreError::InvalidInput(format!("unknown node {id} on path"))))
        .collect::<Result<Vec<_>>>()?;
    for w in nodes.windows(2) {
        if !view.out[w[0]].iter().any(|&(t, _)| t == w[1]) {
            return Err(CoreError::InvalidInput(format!(
                "no scored edge {} -> {}",
                view.ids[w[0]], view.ids[w[1]]
            )));
        }
    }
    Ok(base_probability(&view, &nodes) * coalition_fraction(&view, &nodes, s))
}

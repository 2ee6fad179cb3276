//! Path-based exposure:
//! `E(S) = Σ_c I_c (1 − ∏_{π→c} (1 − P_S(π))) / Σ_c I_c`.
//!
//! Paths sharing edges are combined as if independent.

use super::paths::{attack_path, base_probability, enumerate_raw};
use super::{AttackPath, ScoringView};
use crate::config::{Coalition, ScoringConfig};
use crate::error::Result;
use crate::graph::AssetGraph;

#[derive(Debug, Clone)]
pub struct PathModel {
    paths: Vec<Vec<usize>>,
    base: Vec<f64>,
    // per path: slot of its crown jewel in `impacts`
    slot: Vec<usize>,
    impacts: Vec<f64>,
    total_impact: f64,
    masks: Vec<Vec<u64>>,
    view: ScoringView,
}

impl PathModel {
    pub fn new(view: &ScoringView, config: &ScoringConfig) -> Result<Self> {
        let paths = enumerate_raw(view, config.max_path_len, config.path_cap)?;
        let crowns: Vec<usize> = (0..view.len()).filter(|&i| view.is_crown[i]).collect();
        let impacts: Vec<f64> = crowns.iter().map(|&c| view.impact[c]).collect();
        let slot = paths
            .iter()
            .map(|p| crowns.binary_search(p.last().expect("non-empty path")).expect("path ends at crown"))
            .collect();
        Ok(Self {
            base: paths.iter().map(|p| base_probability(view, p)).collect(),
            masks: paths.iter().map(|p| p.iter().map(|&v| view.domain_mask[v]).collect()).collect(),
            total_impact: impacts.iter().sum(),
            slot,
            impacts,
            paths,
            view: view.clone(),
        })
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn evaluate(&self, s: Coalition) -> f64 {
        if self.paths.is_empty() || s.is_empty() {
            return 0.0;
        }
        let mut survive = vec![1.0; self.impacts.len()];
        for ((masks, &base), &slot) in self.masks.iter().zip(&self.base).zip(&self.slot) {
            let hits = masks.iter().filter(|&&m| s.intersects(m)).count();
            let p = base * hits as f64 / masks.len() as f64;
            survive[slot] *= 1.0 - p;
        }
        let num: f64 = self.impacts.iter().zip(&survive).map(|(i, q)| i * (1.0 - q)).sum();
        num / self.total_impact
    }

    /// Paths scored against `s`, sorted by probability (descending), then
    /// enumeration order; at most `limit`.
    pub fn top_paths(&self, s: Coalition, limit: usize) -> Vec<AttackPath> {
        let mut scored: Vec<(usize, AttackPath)> = self
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| (i, attack_path(&self.view, p, s)))
            .collect();
        scored.sort_by(|a, b| b.1.probability.total_cmp(&a.1.probability).then(a.0.cmp(&b.0)));
        scored.into_iter().take(limit).map(|(_, p)| p).collect()
    }

    /// Number of enumerated paths passing through each node as an interior node.
    pub fn interior_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.view.len()];
        for p in &self.paths {
            for &v in &p[1..p.len() - 1] {
                counts[v] += 1;
            }
        }
        counts
    }
}

/// `E_E(S)` for one coalition.
pub fn exposure_exact(graph: &AssetGraph, s: Coalition, config: &ScoringConfig) -> Result<f64> {
    let view = ScoringView::new(graph, config)?;
    Ok(PathModel::new(&view, config)?.evaluate(s))
}

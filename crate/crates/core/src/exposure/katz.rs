//! All-walks (Katz) exposure `E(S) = aᵀ (I − α W_S)⁻¹ b` with
//! `W_uv = p_uv (1 − R_v) w_v m_{v,S}`.
//!
//! Only nodes reachable from an entry and able to reach a crown jewel can
//! contribute, so the system is pruned to that subgraph before solving.

use super::ScoringView;
use crate::config::{Coalition, ScoringConfig};
use crate::error::{CoreError, Result};
use crate::graph::AssetGraph;
use crate::linalg::{spectral_radius, BlockSystem, SparseMatrix, SpectralEstimate};

const POWER_SEED: u64 = 0x5eed_0f_4a7a;

#[derive(Debug, Clone)]
pub struct KatzModel {
    alpha: f64,
    rho: SpectralEstimate,
    // full-domain matrix on the pruned node set
    w: SparseMatrix,
    // domain mask of each pruned node (column masks for m_{v,S})
    masks: Vec<u64>,
    a: Vec<f64>,
    b: Vec<f64>,
    system: BlockSystem,
}

/// Full-domain weighted adjacency over all view nodes.
pub(crate) fn weighted_adjacency(view: &ScoringView) -> SparseMatrix {
    let mut w = SparseMatrix::new(view.len());
    for (u, out) in view.out.iter().enumerate() {
        for &(v, p) in out {
            let val = p * (1.0 - view.resistance[v]) * view.weight[v];
            if val > 0.0 && view.domain_mask[v] != 0 {
                w.push(u, v, val);
            }
        }
    }
    w
}

/// Attenuation `α = κ / ρ(W_D)` where `W_D` is evaluated with every
/// `R_v = 0`, or `κ` when that radius is 0. A pinned `config.alpha` wins.
///
/// Using the resistance-free matrix keeps `α` fixed under hardening, so
/// exposures with different resistances (including the normalization
/// reference) share one attenuation and remain comparable.
pub fn katz_alpha(view: &ScoringView, config: &ScoringConfig) -> (f64, SpectralEstimate) {
    let reference = weighted_adjacency(&view.with_zero_resistance());
    let rho = spectral_radius(&reference, POWER_SEED);
    if let Some(a) = config.alpha {
        return (a, rho);
    }
    // the upper Collatz–Wielandt bound keeps αρ < 1 even without convergence
    let r = if rho.converged { rho.radius } else { rho.upper };
    let alpha = if r > 0.0 { config.kappa / r } else { config.kappa };
    (alpha, rho)
}

impl KatzModel {
    pub fn new(view: &ScoringView, config: &ScoringConfig) -> Result<Self> {
        let (alpha, rho) = katz_alpha(view, config);
        let full = weighted_adjacency(view);
        if config.alpha.is_some() {
            let actual = spectral_radius(&full, POWER_SEED);
            if alpha * actual.upper >= 1.0 {
                return Err(CoreError::Config(format!(
                    "alpha {alpha} too large for spectral radius {}",
                    actual.radius
                )));
            }
        }

        // prune to nodes on some entry→crown walk
        let n = view.len();
        let mut fwd = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| view.is_entry[i]).collect();
        stack.iter().for_each(|&i| fwd[i] = true);
        while let Some(u) = stack.pop() {
            for &(v, _) in full.row(u) {
                if !fwd[v] {
                    fwd[v] = true;
                    stack.push(v);
                }
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for u in 0..n {
            for &(v, _) in full.row(u) {
                rev[v].push(u);
            }
        }
        let mut bwd = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| view.impact[i] > 0.0).collect();
        stack.iter().for_each(|&i| bwd[i] = true);
        while let Some(v) = stack.pop() {
            for &u in &rev[v] {
                if !bwd[u] {
                    bwd[u] = true;
                    stack.push(u);
                }
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&i| fwd[i] && bwd[i]).collect();
        let mut local = vec![usize::MAX; n];
        for (l, &g) in keep.iter().enumerate() {
            local[g] = l;
        }
        let mut w = SparseMatrix::new(keep.len());
        for (l, &g) in keep.iter().enumerate() {
            for &(v, val) in full.row(g) {
                if local[v] != usize::MAX {
                    w.push(l, local[v], val);
                }
            }
        }
        Ok(Self {
            alpha,
            rho,
            system: BlockSystem::new(&w),
            masks: keep.iter().map(|&g| view.domain_mask[g]).collect(),
            a: keep.iter().map(|&g| if view.is_entry[g] { 1.0 } else { 0.0 }).collect(),
            b: keep.iter().map(|&g| view.impact[g]).collect(),
            w,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Spectral radius estimate of the resistance-free reference matrix.
    pub fn reference_radius(&self) -> SpectralEstimate {
        self.rho
    }

    /// `W_S` on the pruned node set.
    pub fn masked_matrix(&self, s: Coalition) -> SparseMatrix {
        let mut ws = SparseMatrix::new(self.w.dim());
        for u in 0..self.w.dim() {
            for &(v, val) in self.w.row(u) {
                if s.intersects(self.masks[v]) {
                    ws.push(u, v, val);
                }
            }
        }
        ws
    }

    /// Entry indicator and impact vectors on the pruned node set.
    pub fn vectors(&self) -> (&[f64], &[f64]) {
        (&self.a, &self.b)
    }

    pub fn evaluate(&self, s: Coalition) -> Result<f64> {
        if self.w.dim() == 0 {
            return Ok(0.0);
        }
        let ws = self.masked_matrix(s);
        let x = self.system.solve(&ws, self.alpha, &self.b)?;
        Ok(self.a.iter().zip(&x).map(|(a, x)| a * x).sum())
    }
}

/// `E_A(S)` for one coalition.
pub fn exposure_katz(graph: &AssetGraph, s: Coalition, config: &ScoringConfig) -> Result<f64> {
    let view = ScoringView::new(graph, config)?;
    KatzModel::new(&view, config)?.evaluate(s)
}

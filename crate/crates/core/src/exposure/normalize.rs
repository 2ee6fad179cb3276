//! Normalized exposure, readiness index and temporal change.

use serde::{Deserialize, Serialize};

use super::{ExposureModel, ScoringView};
use crate::config::ScoringConfig;
use crate::error::Result;
use crate::graph::AssetGraph;

/// `Ê = E / E_max` clamped to `[0, 1]`; 0 when `E_max` is 0.
pub fn normalize_exposure(e: f64, e_max: f64) -> f64 {
    if e_max > 0.0 {
        (e / e_max).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Reference exposure of the full domain set with every `R_v = 0`, using
/// the backend `config` selects for this graph.
pub fn max_exposure(graph: &AssetGraph, config: &ScoringConfig) -> Result<f64> {
    let view = ScoringView::new(graph, config)?.with_zero_resistance();
    ExposureModel::from_view(&view, config, config.backend_for(graph))?.evaluate(config.domains.full())
}

/// Returns `(Ê, E_max)` for a raw exposure `e`.
pub fn normalize(e: f64, graph: &AssetGraph, config: &ScoringConfig) -> Result<(f64, f64)> {
    let e_max = max_exposure(graph, config)?;
    Ok((normalize_exposure(e, e_max), e_max))
}

/// Post-Quantum Readiness Index, `100 · (1 − Ê(D))`.
pub fn pqri(normalized_full: f64) -> f64 {
    100.0 * (1.0 - normalized_full.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ReadinessDelta {
    /// Relative change `(Ê_t − Ê_t0) / Ê_t0`; negative means mitigation.
    Change(f64),
    /// The baseline had no exposure but the current snapshot does.
    NewlyExposed,
}

pub fn readiness_delta(current: f64, baseline: f64) -> ReadinessDelta {
    if baseline == 0.0 {
        if current == 0.0 {
            ReadinessDelta::Change(0.0)
        } else {
            ReadinessDelta::NewlyExposed
        }
    } else {
        ReadinessDelta::Change((current - baseline) / baseline)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_exposure(0.25, 0.5), 0.5);
        assert_eq!(normalize_exposure(0.3, 0.3), 1.0);
        assert_eq!(normalize_exposure(0.0, 0.0), 0.0);
        assert_eq!(normalize_exposure(0.6, 0.5), 1.0);
    }

    #[test]
    fn pqri_examples() {
        assert_eq!(pqri(0.0), 100.0);
        assert_eq!(pqri(1.0), 0.0);
        assert_eq!(pqri(0.25), 75.0);
    }

    #[test]
    fn delta_examples() {
        match readiness_delta(0.3, 0.4) {
            ReadinessDelta::Change(d) => assert_relative_eq!(d, -0.25, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(readiness_delta(0.4, 0.4), ReadinessDelta::Change(0.0));
        assert_eq!(readiness_delta(0.0, 0.0), ReadinessDelta::Change(0.0));
        assert_eq!(readiness_delta(0.2, 0.0), ReadinessDelta::NewlyExposed);
    }
}

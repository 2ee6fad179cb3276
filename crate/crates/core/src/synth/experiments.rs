//! Backend correlation and finite-difference sensitivity experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generator::{generate_graph, GenSpec};
use crate::config::{Backend, Mode, ScoringConfig};
use crate::error::{CoreError, Result};
use crate::exposure::katz::katz_alpha;
use crate::exposure::{ExposureModel, ScoringView};
use crate::graph::{AssetGraph, EdgeKey, NodeId};
use crate::par::{self, Execution};

pub const MIN_CORRELATION_GRAPHS: usize = 10;
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Tolerance on the sign of a finite-difference derivative.
pub const SIGN_SLACK: f64 = 1e-12;

/// Average ranks (1-based), ties share the mean rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` when either sample has no spread.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub graphs: usize,
    pub exact: Vec<f64>,
    pub katz: Vec<f64>,
    /// `None` when either backend produced constant scores.
    pub spearman: Option<f64>,
}

/// Full-domain exposure of `graph` on a fixed backend.
fn full_exposure(graph: &AssetGraph, config: &ScoringConfig, backend: Backend) -> Result<f64> {
    let view = ScoringView::new(graph, config)?;
    ExposureModel::from_view(&view, config, backend)?.evaluate(config.domains.full())
}

/// Scores every graph with both backends on the full domain set and
/// rank-correlates the results.
pub fn correlation_of(graphs: &[AssetGraph], exec: Execution) -> Result<CorrelationReport> {
    if graphs.len() < MIN_CORRELATION_GRAPHS {
        return Err(CoreError::InvalidInput(format!(
            "correlation needs at least {MIN_CORRELATION_GRAPHS} graphs (got {})",
            graphs.len()
        )));
    }
    let pairs = par::try_map_range(exec, graphs.len(), |i| {
        let cfg = ScoringConfig::from_graph(&graphs[i])?.with_execution(Execution::Sequential);
        Ok::<_, CoreError>((
            full_exposure(&graphs[i], &cfg.clone().with_mode(Mode::ExactPaths), Backend::ExactPaths)?,
            full_exposure(&graphs[i], &cfg.with_mode(Mode::Katz), Backend::Katz)?,
        ))
    })?;
    let (exact, katz): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(CorrelationReport {
        graphs: graphs.len(),
        spearman: spearman(&exact, &katz),
        exact,
        katz,
    })
}

/// Generates one graph per `(spec, seed)` combination and runs [`correlation_of`].
pub fn experiment_correlation(specs: &[GenSpec], seeds: &[u64], exec: Execution) -> Result<CorrelationReport> {
    let combos: Vec<GenSpec> = specs
        .iter()
        .flat_map(|s| seeds.iter().map(move |&seed| s.clone().with_seed(seed)))
        .collect();
    if combos.len() < MIN_CORRELATION_GRAPHS {
        return Err(CoreError::InvalidInput(format!(
            "correlation needs at least {MIN_CORRELATION_GRAPHS} graphs (got {})",
            combos.len()
        )));
    }
    let graphs = par::try_map_range(exec, combos.len(), |i| generate_graph(&combos[i]))?;
    correlation_of(&graphs, exec)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameter {
    Resistance { node: NodeId },
    Exploitability { edge: EdgeKey },
    Impact { node: NodeId },
}

impl Parameter {
    /// Sign the derivative must have: −1 for resistance, +1 otherwise.
    pub fn expected_sign(&self) -> f64 {
        match self {
            Parameter::Resistance { .. } => -1.0,
            _ => 1.0,
        }
    }

    fn value(&self, graph: &AssetGraph, config: &ScoringConfig) -> Result<f64> {
        let missing = || CoreError::InvalidInput(format!("unknown parameter {self:?}"));
        match self {
            Parameter::Resistance { node } => graph.node(node).map(|n| n.resistance).ok_or_else(missing),
            Parameter::Exploitability { edge } => graph.edge(edge).map(|e| e.exploitability).ok_or_else(missing),
            Parameter::Impact { node } => config.crown_jewels.get(node).copied().ok_or_else(missing),
        }
    }

    fn apply(&self, graph: &AssetGraph, config: &ScoringConfig, x: f64) -> Result<(AssetGraph, ScoringConfig)> {
        match self {
            Parameter::Resistance { node } => Ok((
                graph.map(|n| if &n.id == node { n.resistance = x }, |_| {})?,
                config.clone(),
            )),
            Parameter::Exploitability { edge } => Ok((
                graph.map(|_| {}, |e| if &e.key() == edge { e.exploitability = x })?,
                config.clone(),
            )),
            Parameter::Impact { node } => {
                let mut cfg = config.clone();
                cfg.crown_jewels.insert(node.clone(), x);
                Ok((graph.clone(), cfg))
            }
        }
    }
}

/// Every bumpable parameter: all `R_v`, all scored `p_uv` and, when there
/// are at least two crown jewels, every `I_c`. With a single crown jewel
/// `E_E` does not depend on `I_c` at all.
pub fn parameters(graph: &AssetGraph, config: &ScoringConfig) -> Vec<Parameter> {
    let mut out: Vec<Parameter> = graph.nodes().map(|n| Parameter::Resistance { node: n.id.clone() }).collect();
    out.extend(
        graph
            .edges()
            .iter()
            .filter(|e| e.is_scored())
            .map(|e| Parameter::Exploitability { edge: e.key() }),
    );
    if config.crown_jewels.len() >= 2 {
        out.extend(config.crown_jewels.keys().map(|id| Parameter::Impact { node: id.clone() }));
    }
    out
}

/// Central finite difference of the full-domain exposure on `backend`,
/// with both sides clamped to `[0, 1]`. For Katz the attenuation is pinned
/// to the unbumped graph's value so only the bumped parameter moves.
pub fn partial_derivative(
    graph: &AssetGraph,
    config: &ScoringConfig,
    backend: Backend,
    param: &Parameter,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(CoreError::InvalidInput(format!("delta {delta} must be positive")));
    }
    let mut config = config.clone();
    if backend == Backend::Katz && config.alpha.is_none() {
        let view = ScoringView::new(graph, &config)?;
        config.alpha = Some(katz_alpha(&view, &config).0);
    }
    let x0 = param.value(graph, &config)?;
    let (lo, hi) = ((x0 - delta).max(0.0), (x0 + delta).min(1.0));
    if hi <= lo {
        return Ok(0.0);
    }
    let (g_hi, c_hi) = param.apply(graph, &config, hi)?;
    let (g_lo, c_lo) = param.apply(graph, &config, lo)?;
    let e_hi = full_exposure(&g_hi, &c_hi, backend)?;
    let e_lo = full_exposure(&g_lo, &c_lo, backend)?;
    Ok((e_hi - e_lo) / (hi - lo))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCheck {
    pub parameter: Parameter,
    pub derivative: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub backend: Backend,
    pub delta: f64,
    pub checks: Vec<SensitivityCheck>,
    /// False when the graph has a single crown jewel and `I_c` was not bumped.
    pub impact_checked: bool,
}

impl SensitivityReport {
    pub fn violations(&self) -> impl Iterator<Item = &SensitivityCheck> {
        self.checks.iter().filter(|c| c.violation)
    }
}

pub fn is_violation(param: &Parameter, derivative: f64) -> bool {
    param.expected_sign() * derivative < -SIGN_SLACK
}

/// Bumps every parameter from [`parameters`] on the backend `config`
/// selects and checks the sign of each derivative.
pub fn experiment_sensitivity(graph: &AssetGraph, config: &ScoringConfig, delta: f64) -> Result<SensitivityReport> {
    let backend = config.backend_for(graph);
    let params = parameters(graph, config);
    let inner = config.clone().with_execution(Execution::Sequential);
    let checks = par::try_map_range(config.execution, params.len(), |i| {
        let d = partial_derivative(graph, &inner, backend, &params[i], delta)?;
        Ok::<_, CoreError>(SensitivityCheck {
            violation: is_violation(&params[i], d),
            parameter: params[i].clone(),
            derivative: d,
        })
    })?;
    Ok(SensitivityReport {
        backend,
        delta,
        impact_checked: config.crown_jewels.len() >= 2,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    Resistance,
    Exploitability,
    Impact,
}

impl Parameter {
    pub fn kind(&self) -> ParameterKind {
        match self {
            Parameter::Resistance { .. } => ParameterKind::Resistance,
            Parameter::Exploitability { .. } => ParameterKind::Exploitability,
            Parameter::Impact { .. } => ParameterKind::Impact,
        }
    }
}

/// One randomized bump, differentiated on both backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpOutcome {
    pub graph: usize,
    pub parameter: Parameter,
    pub exact: f64,
    pub katz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpReport {
    pub delta: f64,
    pub seed: u64,
    pub bumps: Vec<BumpOutcome>,
}

/// Checked and violating bumps for one backend and parameter kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BumpTally {
    pub checked: usize,
    pub violations: usize,
}

impl BumpReport {
    pub fn tally(&self, backend: Backend, kind: ParameterKind) -> BumpTally {
        let mut t = BumpTally::default();
        for b in self.bumps.iter().filter(|b| b.parameter.kind() == kind) {
            let d = match backend {
                Backend::ExactPaths => b.exact,
                Backend::Katz => b.katz,
            };
            t.checked += 1;
            t.violations += usize::from(is_violation(&b.parameter, d));
        }
        t
    }
}

/// Draws `bumps` (graph, parameter) pairs uniformly from `graphs` and their
/// [`parameters`] and differentiates each on both backends. Draws come from
/// one ChaCha8 stream of `seed`; the derivatives run through `exec`.
pub fn experiment_random_bumps(graphs: &[AssetGraph], bumps: usize, seed: u64, delta: f64, exec: Execution) -> Result<BumpReport> {
    if graphs.is_empty() {
        return Err(CoreError::InvalidInput("random bumps need at least one graph".into()));
    }
    let configs = graphs
        .iter()
        .map(|g| Ok(ScoringConfig::from_graph(g)?.with_execution(Execution::Sequential)))
        .collect::<Result<Vec<_>>>()?;
    let params: Vec<Vec<Parameter>> = graphs.iter().zip(&configs).map(|(g, c)| parameters(g, c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(usize, Parameter)> = (0..bumps)
        .map(|_| {
            let g = rng.random_range(0..graphs.len());
            let k = rng.random_range(0..params[g].len());
            (g, params[g][k].clone())
        })
        .collect();
    let out = par::try_map_range(exec, draws.len(), |i| {
        let (g, param) = &draws[i];
        Ok::<_, CoreError>(BumpOutcome {
            graph: *g,
            exact: partial_derivative(&graphs[*g], &configs[*g], Backend::ExactPaths, param, delta)?,
            katz: partial_derivative(&graphs[*g], &configs[*g], Backend::Katz, param, delta)?,
            parameter: param.clone(),
        })
    })?;
    Ok(BumpReport { delta, seed, bumps: out })
}

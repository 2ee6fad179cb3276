//! Shapley attribution of exposure across cryptographic domains.
//!
//! `φ_d = Σ_{S ⊆ D∖{d}} |S|!(|D|−|S|−1)!/|D|! · (E(S ∪ {d}) − E(S))`.
//!
//! Exact attribution evaluates every coalition once into a table indexed by
//! bitmask. The Monte Carlo estimator averages marginal contributions over
//! uniformly sampled domain orderings, evaluating each distinct prefix
//! coalition once.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Coalition, DomainId, DomainSet, ScoringConfig};
use crate::error::{CoreError, Result};
use crate::exposure::ExposureModel;
use crate::graph::AssetGraph;
use crate::par::{self, Execution};

pub const MAX_EXACT_DOMAINS: usize = 14;
pub const MIN_PERMUTATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub phi: BTreeMap<DomainId, f64>,
    pub method: ShapleyMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations_sampled: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<BTreeMap<DomainId, f64>>,
    /// `E(D)`.
    pub full_exposure: f64,
    /// `E(∅)`. Nonzero only for Katz scoring when an entry is itself a crown jewel.
    pub empty_exposure: f64,
    /// `|Σφ_d − (E(D) − E(∅))|`.
    pub efficiency_gap: f64,
    /// φ rescaled so it sums to `Ê(D)` (filled in by [`normalize_attribution`]).
    pub normalized_phi: BTreeMap<DomainId, f64>,
}

impl AttributionResult {
    /// True when `E(∅) ≠ 0`, so `Σφ_d = E(D) − E(∅)` rather than `E(D)`.
    pub fn baseline_offset(&self) -> bool {
        self.empty_exposure != 0.0
    }
}

/// Coalition weights `s!(n−s−1)!/n!` indexed by coalition size `s`.
pub fn shapley_weights(n: usize) -> Vec<f64> {
    let fact: Vec<f64> = (0..=n).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect()
}

/// Combines coalition values into Shapley values. `value(mask)` is called
/// in a fixed order, so any deterministic source yields identical results.
pub fn shapley_combine(n: usize, value: impl Fn(u64) -> f64) -> Vec<f64> {
    let w = shapley_weights(n);
    (0..n)
        .map(|d| {
            let bit = 1u64 << d;
            (0..1u64 << n)
                .filter(|m| m & bit == 0)
                .map(|m| w[m.count_ones() as usize] * (value(m | bit) - value(m)))
                .sum()
        })
        .collect()
}

/// Shapley values from a table of `2^n` coalition values indexed by bitmask.
pub fn shapley_from_table(values: &[f64]) -> Vec<f64> {
    assert!(values.len().is_power_of_two(), "table length must be 2^n");
    let n = values.len().trailing_zeros() as usize;
    shapley_combine(n, |m| values[m as usize])
}

fn result(
    domains: &DomainSet,
    phi: Vec<f64>,
    method: ShapleyMethod,
    full: f64,
    empty: f64,
) -> AttributionResult {
    let sum: f64 = phi.iter().sum();
    AttributionResult {
        phi: domains.names().iter().cloned().zip(phi).collect(),
        method,
        permutations_sampled: None,
        standard_errors: None,
        full_exposure: full,
        empty_exposure: empty,
        efficiency_gap: (sum - (full - empty)).abs(),
        normalized_phi: BTreeMap::new(),
    }
}

/// Exact attribution over a prepared exposure model.
pub fn exact_from_model(model: &ExposureModel, domains: &DomainSet, exec: Execution) -> Result<AttributionResult> {
    let n = domains.len();
    if n > MAX_EXACT_DOMAINS {
        return Err(CoreError::TooManyDomains {
            got: n,
            max: MAX_EXACT_DOMAINS,
        });
    }
    let table = par::try_map_range(exec, 1 << n, |m| model.evaluate(Coalition(m as u64)))?;
    let phi = shapley_from_table(&table);
    Ok(result(domains, phi, ShapleyMethod::Exact, table[(1 << n) - 1], table[0]))
}

/// Exact attribution without the coalition table: every term re-evaluates
/// `E(S)`. Exponentially slower; kept for cross-checking the memoized path.
pub fn exact_unmemoized(model: &ExposureModel, domains: &DomainSet) -> Result<AttributionResult> {
    let n = domains.len();
    if n > MAX_EXACT_DOMAINS {
        return Err(CoreError::TooManyDomains {
            got: n,
            max: MAX_EXACT_DOMAINS,
        });
    }
    let first_err = std::cell::RefCell::new(None);
    let phi = shapley_combine(n, |m| {
        model.evaluate(Coalition(m)).unwrap_or_else(|e| {
            first_err.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    });
    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }
    let full = model.evaluate(domains.full())?;
    let empty = model.evaluate(Coalition::EMPTY)?;
    Ok(result(domains, phi, ShapleyMethod::Exact, full, empty))
}

/// Default Monte Carlo budget: `max(10·|D|², 100)` permutations.
pub fn default_permutations(n_domains: usize) -> usize {
    (10 * n_domains * n_domains).max(MIN_PERMUTATIONS)
}

/// Permutation-sampling estimate over a prepared exposure model.
pub fn mc_from_model(
    model: &ExposureModel,
    domains: &DomainSet,
    permutations: usize,
    seed: u64,
    exec: Execution,
) -> Result<AttributionResult> {
    if permutations < MIN_PERMUTATIONS {
        return Err(CoreError::InvalidInput(format!(
            "at least {MIN_PERMUTATIONS} permutations required (got {permutations})"
        )));
    }
    let n = domains.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let perms: Vec<Vec<usize>> = (0..permutations)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect();

    let mut needed = BTreeSet::from([0u64]);
    for p in &perms {
        let mut m = 0u64;
        for &d in p {
            m |= 1 << d;
            needed.insert(m);
        }
    }
    needed.insert(domains.full().0);
    let keys: Vec<u64> = needed.into_iter().collect();
    let values = par::try_map_range(exec, keys.len(), |i| model.evaluate(Coalition(keys[i])))?;
    let memo: HashMap<u64, f64> = keys.into_iter().zip(values).collect();

    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for p in &perms {
        let mut m = 0u64;
        let mut prev = memo[&0];
        for &d in p {
            m |= 1 << d;
            let cur = memo[&m];
            let marginal = cur - prev;
            sum[d] += marginal;
            sum_sq[d] += marginal * marginal;
            prev = cur;
        }
    }
    let count = permutations as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let se: Vec<f64> = (0..n)
        .map(|d| {
            let mean = phi[d];
            let var = ((sum_sq[d] - count * mean * mean) / (count - 1.0)).max(0.0);
            (var / count).sqrt()
        })
        .collect();
    let mut out = result(domains, phi, ShapleyMethod::MonteCarlo, memo[&domains.full().0], memo[&0]);
    out.permutations_sampled = Some(permutations);
    out.standard_errors = Some(domains.names().iter().cloned().zip(se).collect());
    Ok(out)
}

/// Rescales φ so that it sums to `Ê(D)`: `φ̂_d = φ_d · Ê(D)/E(D)`.
/// All zeros when `E(D) = 0`.
pub fn normalize_attribution(
    phi: &BTreeMap<DomainId, f64>,
    normalized_full: f64,
    full: f64,
) -> BTreeMap<DomainId, f64> {
    let scale = if full != 0.0 { normalized_full / full } else { 0.0 };
    phi.iter().map(|(d, v)| (d.clone(), v * scale)).collect()
}

/// Exact attribution for a graph with the backend selected by `config`.
pub fn shapley_exact(graph: &AssetGraph, config: &ScoringConfig) -> Result<AttributionResult> {
    let model = ExposureModel::prepare(graph, config)?;
    exact_from_model(&model, &config.domains, config.execution)
}

/// Monte Carlo attribution for a graph with the backend selected by `config`.
pub fn shapley_mc(graph: &AssetGraph, config: &ScoringConfig, permutations: usize, seed: u64) -> Result<AttributionResult> {
    let model = ExposureModel::prepare(graph, config)?;
    mc_from_model(&model, &config.domains, permutations, seed, config.execution)
}

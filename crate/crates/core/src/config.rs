use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::{AssetGraph, NodeId};
use crate::par::Execution;

/// Maximum number of domains a [`DomainSet`] can index (coalitions are `u64` masks).
pub const MAX_DOMAINS: usize = 64;

/// Cryptographic domain name, e.g. `transport` or `code-signing`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainId(String);

impl DomainId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered set of domains. Bit `i` of a [`Coalition`] refers to `names()[i]`;
/// domains are ordered by name so masks are stable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainSet {
    names: Vec<DomainId>,
}

impl DomainSet {
    pub fn new(names: impl IntoIterator<Item = DomainId>) -> Result<Self> {
        let names: Vec<DomainId> = names.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if names.len() > MAX_DOMAINS {
            return Err(CoreError::Config(format!("at most {MAX_DOMAINS} domains supported")));
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[DomainId] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, d: &DomainId) -> Option<usize> {
        self.names.binary_search(d).ok()
    }

    /// Bitmask of the given domains; names outside the set are ignored.
    pub fn mask_of<'a>(&self, domains: impl IntoIterator<Item = &'a DomainId>) -> u64 {
        domains
            .into_iter()
            .filter_map(|d| self.index_of(d))
            .fold(0, |m, i| m | (1u64 << i))
    }

    pub fn full(&self) -> Coalition {
        Coalition::full(self.len())
    }

    pub fn coalition<'a>(&self, domains: impl IntoIterator<Item = &'a str>) -> Result<Coalition> {
        let mut mask = 0;
        for d in domains {
            let i = self
                .index_of(&DomainId::new(d))
                .ok_or_else(|| CoreError::Config(format!("unknown domain {d}")))?;
            mask |= 1 << i;
        }
        Ok(Coalition(mask))
    }
}

/// A subset of the domain set, as a bitmask over [`DomainSet`] positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coalition(pub u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn with(self, i: usize) -> Self {
        Coalition(self.0 | (1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersects(self, mask: u64) -> bool {
        self.0 & mask != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[serde(alias = "exact")]
    ExactPaths,
    Katz,
    #[default]
    Auto,
}

impl std::str::FromStr for Mode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_paths" => Ok(Mode::ExactPaths),
            "katz" => Ok(Mode::Katz),
            "auto" => Ok(Mode::Auto),
            other => Err(CoreError::InvalidInput(format!("unknown mode {other}"))),
        }
    }
}

/// Concrete exposure backend after resolving [`Mode::Auto`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    ExactPaths,
    Katz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    /// Entry set `A`.
    pub entry_nodes: BTreeSet<NodeId>,
    /// Crown jewels `C` with impacts `I_c`.
    pub crown_jewels: BTreeMap<NodeId, f64>,
    pub domains: DomainSet,
    pub node_domains: BTreeMap<NodeId, BTreeSet<DomainId>>,
    /// Katz attenuation as a fraction of `1/ρ`.
    pub kappa: f64,
    /// Maximum number of nodes on an enumerated path.
    pub max_path_len: usize,
    pub mode: Mode,
    /// Auto mode uses exact paths up to this many nodes.
    pub auto_threshold: usize,
    /// Exact mode refuses graphs with more paths than this.
    pub path_cap: usize,
    /// Pinned Katz attenuation. When unset, `α = κ/ρ(W)` is derived per run.
    pub alpha: Option<f64>,
    pub execution: Execution,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            entry_nodes: BTreeSet::new(),
            crown_jewels: BTreeMap::new(),
            domains: DomainSet::default(),
            node_domains: BTreeMap::new(),
            kappa: 0.5,
            max_path_len: 8,
            mode: Mode::Auto,
            auto_threshold: 500,
            path_cap: 1_000_000,
            alpha: None,
            execution: Execution::default(),
        }
    }
}

impl ScoringConfig {
    /// Derives `A`, `C`, `D` and node domain membership from node attributes:
    /// entries are nodes flagged `is_entry`, crown jewels are nodes with
    /// `crown_impact > 0`, and the domain set is the union of node domains.
    pub fn from_graph(graph: &AssetGraph) -> Result<Self> {
        let mut cfg = Self::default();
        let mut all = BTreeSet::new();
        for n in graph.nodes() {
            if n.is_entry {
                cfg.entry_nodes.insert(n.id.clone());
            }
            if n.crown_impact > 0.0 {
                cfg.crown_jewels.insert(n.id.clone(), n.crown_impact);
            }
            if !n.domains.is_empty() {
                cfg.node_domains.insert(n.id.clone(), n.domains.clone());
                all.extend(n.domains.iter().cloned());
            }
        }
        cfg.domains = DomainSet::new(all)?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_max_path_len(mut self, len: usize) -> Self {
        self.max_path_len = len;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_alpha(mut self, alpha: Option<f64>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn backend_for(&self, graph: &AssetGraph) -> Backend {
        match self.mode {
            Mode::ExactPaths => Backend::ExactPaths,
            Mode::Katz => Backend::Katz,
            Mode::Auto if graph.node_count() <= self.auto_threshold => Backend::ExactPaths,
            Mode::Auto => Backend::Katz,
        }
    }

    /// Checks everything a scoring call needs.
    pub fn validate(&self, graph: &AssetGraph) -> Result<()> {
        if self.entry_nodes.is_empty() {
            return Err(CoreError::Config("entry set is empty".into()));
        }
        if self.crown_jewels.is_empty() {
            return Err(CoreError::Config("crown jewel set is empty".into()));
        }
        if self.domains.is_empty() {
            return Err(CoreError::Config("domain set is empty".into()));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(CoreError::Config(format!("kappa {} outside (0, 1)", self.kappa)));
        }
        if self.max_path_len < 1 {
            return Err(CoreError::Config("max path length must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CoreError::Config(format!("alpha {a} must be positive")));
            }
        }
        for id in self.entry_nodes.iter().chain(self.crown_jewels.keys()).chain(self.node_domains.keys()) {
            if graph.node(id).is_none() {
                return Err(CoreError::Config(format!("unknown node {id}")));
            }
        }
        let mut total = 0.0;
        for (id, &i) in &self.crown_jewels {
            if !(0.0..=1.0).contains(&i) {
                return Err(CoreError::Config(format!("impact of {id} = {i} outside [0, 1]")));
            }
            total += i;
        }
        if total <= 0.0 {
            return Err(CoreError::Config("sum of crown jewel impacts is zero".into()));
        }
        Ok(())
    }
}

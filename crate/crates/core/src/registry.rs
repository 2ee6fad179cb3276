//! Mapping from cryptographic algorithm identifiers to PQ resistance.
//!
//! The registry is a tab-separated table (`algorithm category lo hi point`)
//! shipped with the crate and overridable from a file. Lookups are
//! case-insensitive; unknown algorithms fail closed to resistance 0.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

const SHIPPED: &str = include_str!("../data/resistance_registry.tsv");

/// Resistance assigned to algorithms missing from the registry.
pub const UNKNOWN_ALGORITHM_RESISTANCE: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResistanceCategory {
    Vulnerable,
    Transitional,
    QuantumSafe,
}

impl ResistanceCategory {
    /// Interval that every range in this category must lie within.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            ResistanceCategory::Vulnerable => (0.0, 0.3),
            ResistanceCategory::Transitional => (0.3, 0.7),
            ResistanceCategory::QuantumSafe => (0.9, 1.0),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "vulnerable" => Some(Self::Vulnerable),
            "transitional" => Some(Self::Transitional),
            "quantum_safe" => Some(Self::QuantumSafe),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub algorithm: String,
    pub category: ResistanceCategory,
    pub range: (f64, f64),
    pub point: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistanceLookup {
    pub resistance: f64,
    pub category: Option<ResistanceCategory>,
    /// True when the algorithm was unknown and the fail-closed default applied.
    pub defaulted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceRegistry {
    // keyed by lowercased algorithm id
    entries: BTreeMap<String, RegistryEntry>,
    unknown_default: f64,
}

impl Default for ResistanceRegistry {
    fn default() -> Self {
        Self::shipped()
    }
}

impl ResistanceRegistry {
    pub fn shipped() -> Self {
        Self::parse(SHIPPED).expect("shipped registry is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CoreError::Parse {
                path: "registry".into(),
                line: lineno + 1,
                column: 1,
                message: msg.to_string(),
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [algorithm, category, lo, hi, point] = cols[..] else {
                return Err(bad("expected 5 columns: algorithm category lo hi point"));
            };
            let category = ResistanceCategory::parse(category).ok_or_else(|| bad("unknown category"))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid number"));
            let entry = RegistryEntry {
                algorithm: algorithm.to_string(),
                category,
                range: (num(lo)?, num(hi)?),
                point: num(point)?,
            };
            check_entry(&entry).map_err(|m| bad(&m))?;
            entries.insert(algorithm.to_ascii_lowercase(), entry);
        }
        Ok(Self {
            entries,
            unknown_default: UNKNOWN_ALGORITHM_RESISTANCE,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.entries.values()
    }

    pub fn unknown_default(&self) -> f64 {
        self.unknown_default
    }

    pub fn lookup(&self, algorithm: &str) -> ResistanceLookup {
        match self.entries.get(&algorithm.trim().to_ascii_lowercase()) {
            Some(e) => ResistanceLookup {
                resistance: e.point,
                category: Some(e.category),
                defaulted: false,
            },
            None => ResistanceLookup {
                resistance: self.unknown_default,
                category: None,
                defaulted: true,
            },
        }
    }

    /// Point resistance for one algorithm.
    pub fn lookup_resistance(&self, algorithm: &str) -> f64 {
        self.lookup(algorithm).resistance
    }

    /// Weakest-link resistance: the minimum over all deployed algorithms.
    /// An empty list gets the unknown-algorithm default.
    pub fn weakest_link_resistance<S: AsRef<str>>(&self, algorithms: &[S]) -> f64 {
        algorithms
            .iter()
            .map(|a| self.lookup_resistance(a.as_ref()))
            .reduce(f64::min)
            .unwrap_or(self.unknown_default)
    }
}

fn check_entry(e: &RegistryEntry) -> std::result::Result<(), String> {
    let (lo, hi) = e.range;
    let (blo, bhi) = e.category.bounds();
    if !(lo <= hi && lo >= blo && hi <= bhi) {
        return Err(format!("{}: range [{lo}, {hi}] outside category bounds [{blo}, {bhi}]", e.algorithm));
    }
    if !(lo..=hi).contains(&e.point) {
        return Err(format!("{}: point {} outside range", e.algorithm, e.point));
    }
    Ok(())
}

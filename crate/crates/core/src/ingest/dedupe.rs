//! Merges scanner records that describe the same entity.

use std::collections::BTreeMap;

use tracing::warn;

use super::records::{canonical_fingerprint, canonical_fqdn, ScanRecord};

/// An attribute that two scanners reported with different values.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeConflict {
    pub identity: String,
    pub attribute: String,
    pub kept: (String, String),
    pub dropped: (String, String),
}

/// Merges records sharing an identity key. Attribute conflicts are resolved
/// in favour of the most recent observation. Output is ordered by identity
/// key; records without any identity are dropped.
pub fn dedupe_assets(records: Vec<ScanRecord>) -> Vec<ScanRecord> {
    dedupe_with_conflicts(records).0
}

pub fn dedupe_with_conflicts(records: Vec<ScanRecord>) -> (Vec<ScanRecord>, Vec<AttributeConflict>) {
    let mut groups: BTreeMap<String, Vec<ScanRecord>> = BTreeMap::new();
    for r in records {
        match r.identity_key() {
            Some(k) => groups.entry(k).or_default().push(r),
            None => warn!(scanner = %r.scanner, "dropping scan record without identity"),
        }
    }
    let mut conflicts = Vec::new();
    let merged = groups
        .into_iter()
        .map(|(key, mut group)| {
            group.sort_by_key(|r| r.observed_at);
            merge_group(&key, group, &mut conflicts)
        })
        .collect();
    (merged, conflicts)
}

fn merge_group(key: &str, group: Vec<ScanRecord>, conflicts: &mut Vec<AttributeConflict>) -> ScanRecord {
    let mut iter = group.into_iter();
    let mut acc = normalize(iter.next().expect("non-empty group"));
    for r in iter.map(normalize) {
        for (k, v) in &r.attributes {
            if let Some(old) = acc.attributes.get(k) {
                if old != v {
                    let c = AttributeConflict {
                        identity: key.to_string(),
                        attribute: k.clone(),
                        kept: (r.scanner.clone(), v.clone()),
                        dropped: (acc.scanner.clone(), old.clone()),
                    };
                    warn!(identity = key, attribute = %k, kept = %v, dropped = %old, "attribute conflict");
                    conflicts.push(c);
                }
            }
            acc.attributes.insert(k.clone(), v.clone());
        }
        if r.scanner != acc.scanner {
            acc.also_seen_by.push(acc.scanner.clone());
        }
        acc.also_seen_by.extend(r.also_seen_by.iter().cloned());
        acc.scanner = r.scanner;
        acc.observed_at = acc.observed_at.max(r.observed_at);
        acc.kind = r.kind;
        acc.fqdn = r.fqdn.or(acc.fqdn);
        acc.ip = r.ip.or(acc.ip);
        acc.fingerprint = r.fingerprint.or(acc.fingerprint);
        acc.label = r.label.or(acc.label);
        acc.business_weight = r.business_weight.or(acc.business_weight);
        acc.resistance = r.resistance.or(acc.resistance);
        acc.crown = r.crown.or(acc.crown);
        acc.is_entry |= r.is_entry;
        acc.domains.extend(r.domains);
        acc.algorithms.extend(r.algorithms);
        acc.addresses.extend(r.addresses);
        acc.relations.extend(r.relations);
    }
    normalize(acc)
}

// Canonical form of one record; normalizing twice is a no-op.
fn normalize(mut r: ScanRecord) -> ScanRecord {
    r.fqdn = r.fqdn.map(|f| canonical_fqdn(&f));
    r.fingerprint = r.fingerprint.map(|f| canonical_fingerprint(&f));
    let mut seen = std::collections::BTreeSet::new();
    r.algorithms.retain(|a| seen.insert(a.clone()));
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for a in r.addresses.drain(..) {
        let c = best.entry(a.ip).or_insert(a.confidence);
        *c = c.max(a.confidence);
    }
    r.addresses = best
        .into_iter()
        .map(|(ip, confidence)| super::records::AddressObservation { ip, confidence })
        .collect();
    let mut seen = Vec::new();
    r.relations.retain(|x| {
        if seen.contains(x) {
            false
        } else {
            seen.push(x.clone());
            true
        }
    });
    r.also_seen_by.retain(|s| s != &r.scanner);
    r.also_seen_by.sort();
    r.also_seen_by.dedup();
    r
}

//! Persistent state shared by the scheduler and the API: immutable graph
//! versions, the validation queue, the verdict cache, the review queue, the
//! audit log, settings and idempotency keys.
//!
//! Every mutation runs against a copy of the state under one lock, is
//! written to disk (temp file, fsync, rename) and only then swapped in, so a
//! crash leaves either the old or the new state. Graph versions are
//! immutable and written once to their own files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tracing::{debug, info};

use pqready_core::graph::{AssetGraph, EdgeKey, ValidationStatus};
use pqready_core::snapshot::{parse_snapshot, serialize_snapshot, SnapshotDocument};

use crate::aggregate::Decision;
use crate::error::{Result, ValidationError};
use crate::model::{
    FinalDecision, HumanDecision, HumanRecord, ItemId, ItemStatus, ValidationItem, ValidationSettings, Verdict,
};

const STATE_FILE: &str = "state.json";
const VERSIONS_DIR: &str = "versions";

pub const BACKOFF_BASE_SECONDS: i64 = 5;
pub const BACKOFF_CAP_SECONDS: i64 = 300;

/// Retry delay after the `attempt`-th consecutive failure (1-based).
pub fn backoff(attempt: u32) -> Duration {
    let exp = attempt.saturating_sub(1).min(16);
    Duration::seconds((BACKOFF_BASE_SECONDS << exp).min(BACKOFF_CAP_SECONDS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: u64,
    pub created_at: DateTime<Utc>,
    /// Version this one was derived from when it only applies status changes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub verdicts: Vec<Verdict>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub at: DateTime<Utc>,
    pub item_id: ItemId,
    pub edge: EdgeKey,
    pub reviewer: String,
    pub decision: HumanDecision,
    pub prior_final: Option<FinalDecision>,
    pub prior_reason: Option<String>,
    pub prior_llm_verdicts: Vec<Verdict>,
    pub prior_rule_verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IdempotencyRecord {
    fingerprint: u64,
    version: u64,
}

/// Result of an ingest call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReceipt {
    pub version: u64,
    pub enqueued: usize,
    /// True when an earlier request with the same idempotency key was replayed.
    pub replayed: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct State {
    next_version: u64,
    next_item: ItemId,
    versions: BTreeMap<u64, VersionInfo>,
    /// Status changes not yet folded into a version.
    #[serde(default)]
    overrides: BTreeMap<String, (EdgeKey, ValidationStatus)>,
    items: BTreeMap<ItemId, ValidationItem>,
    cache: BTreeMap<String, CacheEntry>,
    audit: Vec<AuditEntry>,
    settings: ValidationSettings,
    idempotency: BTreeMap<String, IdempotencyRecord>,
}

struct Inner {
    state: State,
    graphs: BTreeMap<u64, Arc<AssetGraph>>,
}

/// Cheaply cloneable handle to the store.
#[derive(Clone)]
pub struct Store {
    inner: Arc<Mutex<Inner>>,
    dir: Option<Arc<PathBuf>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("dir", &self.dir).finish_non_exhaustive()
    }
}

/// FNV-1a over the request body, used to tell a retry from a key reuse.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn cache_key(edge: &EdgeKey, settings: &ValidationSettings) -> String {
    format!(
        "{}|{}|{}|{}|k={}|t={}",
        edge.source, edge.relation, edge.target, settings.model_name, settings.votes_per_item, settings.temperature
    )
}

fn edge_id(edge: &EdgeKey) -> String {
    format!("{}|{}|{}", edge.source, edge.relation, edge.target)
}

fn store_err(e: impl std::fmt::Display) -> ValidationError {
    ValidationError::Store(e.to_string())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

impl Store {
    /// Volatile store for tests and one-shot CLI runs.
    pub fn in_memory() -> Self {
        Self::with_state(State::default(), BTreeMap::new(), None)
    }

    /// Opens (or creates) a store directory. Items left `processing` by a
    /// crashed run go back to `pending`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(dir.join(VERSIONS_DIR))?;
        let state_path = dir.join(STATE_FILE);
        let mut state: State = if state_path.exists() {
            serde_json::from_slice(&fs::read(&state_path)?).map_err(store_err)?
        } else {
            State::default()
        };
        let mut graphs = BTreeMap::new();
        for &v in state.versions.keys() {
            let doc = parse_snapshot(&fs::read(version_path(&dir, v))?)?;
            graphs.insert(v, Arc::new(doc.to_graph()?));
        }
        let mut recovered = 0;
        for item in state.items.values_mut() {
            if item.status == ItemStatus::Processing {
                item.status = ItemStatus::Pending;
                recovered += 1;
            }
        }
        let store = Self::with_state(state, graphs, Some(dir));
        if recovered > 0 {
            info!(recovered, "requeued items left processing by an earlier run");
            store.mutate(|_| Ok(()))?;
        }
        Ok(store)
    }

    fn with_state(state: State, graphs: BTreeMap<u64, Arc<AssetGraph>>, dir: Option<PathBuf>) -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner { state, graphs })),
            dir: dir.map(Arc::new),
        }
    }

    pub fn is_persistent(&self) -> bool {
        self.dir.is_some()
    }

    /// Applies `f` to a copy of the state, persists it, then commits.
    fn mutate<T>(&self, f: impl FnOnce(&mut State) -> Result<T>) -> Result<T> {
        let mut inner = self.inner.lock();
        let mut next = inner.state.clone();
        let out = f(&mut next)?;
        if let Some(dir) = &self.dir {
            let bytes = serde_json::to_vec(&next).map_err(store_err)?;
            write_atomic(&dir.join(STATE_FILE), &bytes)?;
        }
        inner.state = next;
        Ok(out)
    }

    fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        f(&self.inner.lock().state)
    }

    /// Registers an immutable graph version. Caller holds the lock.
    fn add_version(&self, inner: &mut Inner, graph: AssetGraph, parent: Option<u64>, now: DateTime<Utc>) -> Result<u64> {
        let v = inner.state.next_version + 1;
        if let Some(dir) = &self.dir {
            let doc = SnapshotDocument::from_graph(&graph, now);
            write_atomic(&version_path(dir, v), &serialize_snapshot(&doc))?;
        }
        inner.state.next_version = v;
        inner.state.versions.insert(
            v,
            VersionInfo {
                version: v,
                created_at: now,
                parent,
                nodes: graph.node_count(),
                edges: graph.edge_count(),
            },
        );
        inner.graphs.insert(v, Arc::new(graph));
        Ok(v)
    }

    /// Stores a new graph version and enqueues its unvalidated edges.
    ///
    /// With an idempotency key, a retry carrying the same body returns the
    /// original version; reusing the key for a different body is a conflict.
    pub fn ingest_snapshot(
        &self,
        doc: &SnapshotDocument,
        idempotency_key: Option<&str>,
        now: DateTime<Utc>,
    ) -> Result<IngestReceipt> {
        let body = serialize_snapshot(doc);
        let fp = fingerprint(&body);
        if let Some(key) = idempotency_key {
            if let Some(rec) = self.read(|s| s.idempotency.get(key).cloned()) {
                return if rec.fingerprint == fp {
                    Ok(IngestReceipt {
                        version: rec.version,
                        enqueued: 0,
                        replayed: true,
                    })
                } else {
                    Err(ValidationError::Conflict(format!("idempotency key {key:?} was used for a different body")))
                };
            }
        }
        let graph = doc.to_graph().map_err(|e| ValidationError::InvalidInput(e.to_string()))?;

        let mut inner = self.inner.lock();
        let snapshot = (inner.state.clone(), inner.graphs.clone());
        let result = (|| {
            let v = self.add_version(&mut inner, graph, None, now)?;
            let graph = inner.graphs[&v].clone();
            let state = &mut inner.state;
            // a fresh snapshot supersedes status changes made against the old one
            state.overrides.clear();
            let open: std::collections::BTreeSet<EdgeKey> = state
                .items
                .values()
                .filter(|i| i.status != ItemStatus::Complete)
                .map(|i| i.edge.clone())
                .collect();
            let mut enqueued = 0;
            for e in graph.edges() {
                if e.validation_status != ValidationStatus::Unvalidated || open.contains(&e.key()) {
                    continue;
                }
                state.next_item += 1;
                let id = state.next_item;
                state.items.insert(id, ValidationItem::new(id, e.key(), v, now));
                enqueued += 1;
            }
            if let Some(key) = idempotency_key {
                state.idempotency.insert(key.to_string(), IdempotencyRecord { fingerprint: fp, version: v });
            }
            if let Some(dir) = &self.dir {
                let bytes = serde_json::to_vec(&*state).map_err(store_err)?;
                write_atomic(&dir.join(STATE_FILE), &bytes)?;
            }
            Ok(IngestReceipt {
                version: v,
                enqueued,
                replayed: false,
            })
        })();
        if result.is_err() {
            (inner.state, inner.graphs) = snapshot;
        } else {
            debug!(?result, "ingested snapshot");
        }
        result
    }

    /// Latest version id, folding pending status changes into a new version first.
    pub fn latest_version(&self) -> Result<Option<u64>> {
        let mut inner = self.inner.lock();
        let Some(&latest) = inner.state.versions.keys().next_back() else {
            return Ok(None);
        };
        if inner.state.overrides.is_empty() {
            return Ok(Some(latest));
        }
        let statuses: BTreeMap<EdgeKey, ValidationStatus> = inner.state.overrides.values().cloned().collect();
        let graph = inner.graphs[&latest].with_edge_statuses(&statuses);
        let prev = (inner.state.clone(), inner.graphs.clone());
        let now = Utc::now();
        let res = (|| {
            let v = self.add_version(&mut inner, graph, Some(latest), now)?;
            inner.state.overrides.clear();
            if let Some(dir) = &self.dir {
                let bytes = serde_json::to_vec(&inner.state).map_err(store_err)?;
                write_atomic(&dir.join(STATE_FILE), &bytes)?;
            }
            Ok(v)
        })();
        if res.is_err() {
            (inner.state, inner.graphs) = prev;
        }
        res.map(Some)
    }

    /// Graph at `version`, or the latest one when `None`.
    pub fn graph(&self, version: Option<u64>) -> Result<(u64, Arc<AssetGraph>)> {
        let v = match version {
            Some(v) => v,
            None => self
                .latest_version()?
                .ok_or_else(|| ValidationError::NotFound("no graph version ingested yet".into()))?,
        };
        self.inner
            .lock()
            .graphs
            .get(&v)
            .map(|g| (v, g.clone()))
            .ok_or_else(|| ValidationError::NotFound(format!("graph version {v}")))
    }

    pub fn versions(&self) -> Vec<VersionInfo> {
        self.read(|s| s.versions.values().cloned().collect())
    }

    pub fn settings(&self) -> ValidationSettings {
        self.read(|s| s.settings.clone())
    }

    pub fn put_settings(&self, settings: ValidationSettings) -> Result<ValidationSettings> {
        settings.validate()?;
        self.mutate(|s| {
            s.settings = settings.clone();
            Ok(settings)
        })
    }

    pub fn enqueue(&self, edge: EdgeKey, version: u64, now: DateTime<Utc>) -> Result<ItemId> {
        if !self.inner.lock().graphs.contains_key(&version) {
            return Err(ValidationError::NotFound(format!("graph version {version}")));
        }
        self.mutate(|s| {
            s.next_item += 1;
            let id = s.next_item;
            s.items.insert(id, ValidationItem::new(id, edge, version, now));
            Ok(id)
        })
    }

    /// Claims up to `n` due pending items in id order, marking them `processing`.
    pub fn claim_batch(&self, n: usize, now: DateTime<Utc>) -> Result<Vec<ValidationItem>> {
        self.mutate(|s| {
            let ids: Vec<ItemId> = s
                .items
                .values()
                .filter(|i| i.status == ItemStatus::Pending && i.next_attempt_at.is_none_or(|t| t <= now))
                .map(|i| i.id)
                .take(n)
                .collect();
            Ok(ids
                .into_iter()
                .map(|id| {
                    let item = s.items.get_mut(&id).expect("claimed id exists");
                    item.status = ItemStatus::Processing;
                    item.clone()
                })
                .collect())
        })
    }

    /// Finalizes a claimed item. Completing an item that is not `processing`
    /// is a conflict, so an item is never finalized twice.
    pub fn complete_item(
        &self,
        id: ItemId,
        verdicts: Vec<Verdict>,
        rule: Verdict,
        decision: &Decision,
    ) -> Result<ValidationItem> {
        self.mutate(|s| {
            let item = s.items.get_mut(&id).ok_or_else(|| ValidationError::NotFound(format!("item {id}")))?;
            if item.status != ItemStatus::Processing {
                return Err(ValidationError::Conflict(format!("item {id} is {:?}, not processing", item.status)));
            }
            item.status = ItemStatus::Complete;
            item.llm_verdicts = verdicts;
            item.rule_verdict = Some(rule);
            item.llm_confidence = decision.llm_confidence;
            item.final_decision = Some(decision.final_decision);
            item.routed_reason = Some(decision.reason.clone());
            item.next_attempt_at = None;
            item.last_error = None;
            let item = item.clone();
            s.overrides
                .insert(edge_id(&item.edge), (item.edge.clone(), decision.final_decision.edge_status()));
            Ok(item)
        })
    }

    /// Returns a claimed item to the queue after a transient failure.
    pub fn defer_item(&self, id: ItemId, error: &str, now: DateTime<Utc>) -> Result<ValidationItem> {
        self.mutate(|s| {
            let item = s.items.get_mut(&id).ok_or_else(|| ValidationError::NotFound(format!("item {id}")))?;
            if item.status != ItemStatus::Processing {
                return Err(ValidationError::Conflict(format!("item {id} is {:?}, not processing", item.status)));
            }
            item.status = ItemStatus::Pending;
            item.attempts += 1;
            item.next_attempt_at = Some(now + backoff(item.attempts));
            item.last_error = Some(error.to_string());
            Ok(item.clone())
        })
    }

    pub fn cache_lookup(&self, key: &str) -> Option<CacheEntry> {
        self.read(|s| s.cache.get(key).cloned())
    }

    pub fn cache_insert(&self, key: String, verdicts: Vec<Verdict>, now: DateTime<Utc>) -> Result<()> {
        self.mutate(|s| {
            s.cache.entry(key).or_insert(CacheEntry { verdicts, created_at: now });
            Ok(())
        })
    }

    pub fn item(&self, id: ItemId) -> Result<ValidationItem> {
        self.read(|s| s.items.get(&id).cloned())
            .ok_or_else(|| ValidationError::NotFound(format!("item {id}")))
    }

    pub fn items(&self) -> Vec<ValidationItem> {
        self.read(|s| s.items.values().cloned().collect())
    }

    /// Completed items routed to review and not yet decided.
    pub fn review_queue(&self) -> Vec<ValidationItem> {
        self.read(|s| s.items.values().filter(|i| i.awaiting_review()).cloned().collect())
    }

    /// Terminal human decision on a review item; appends an audit row.
    pub fn record_human_decision(
        &self,
        id: ItemId,
        decision: HumanDecision,
        reviewer: &str,
        now: DateTime<Utc>,
    ) -> Result<ValidationItem> {
        if reviewer.trim().is_empty() {
            return Err(ValidationError::InvalidInput("reviewer is required".into()));
        }
        self.mutate(|s| {
            let item = s.items.get_mut(&id).ok_or_else(|| ValidationError::NotFound(format!("item {id}")))?;
            if let Some(h) = &item.human {
                return Err(ValidationError::Conflict(format!(
                    "item {id} was already decided ({:?}) by {}",
                    h.decision, h.reviewer
                )));
            }
            if !item.awaiting_review() {
                return Err(ValidationError::Conflict(format!("item {id} is not awaiting review")));
            }
            item.human = Some(HumanRecord {
                decision,
                reviewer: reviewer.to_string(),
                decided_at: now,
            });
            let item = item.clone();
            s.audit.push(AuditEntry {
                at: now,
                item_id: id,
                edge: item.edge.clone(),
                reviewer: reviewer.to_string(),
                decision,
                prior_final: item.final_decision,
                prior_reason: item.routed_reason.clone(),
                prior_llm_verdicts: item.llm_verdicts.clone(),
                prior_rule_verdict: item.rule_verdict.clone(),
            });
            s.overrides
                .insert(edge_id(&item.edge), (item.edge.clone(), decision.edge_status()));
            Ok(item)
        })
    }

    pub fn audit(&self) -> Vec<AuditEntry> {
        self.read(|s| s.audit.clone())
    }
}

fn version_path(dir: &Path, v: u64) -> PathBuf {
    dir.join(VERSIONS_DIR).join(format!("{v:08}.json"))
}

//! Deterministic in-process stand-in for the inference endpoint.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;

use crate::llm::{LlmBackend, LlmError};
use crate::model::ValidationSettings;

type Responder = dyn Fn(&str, usize) -> Result<String, LlmError> + Send + Sync;

/// Answers from a closure of `(prompt, vote)` and counts every call.
#[derive(Clone)]
pub struct StubLlm {
    responder: Arc<Responder>,
    calls: Arc<AtomicUsize>,
}

impl StubLlm {
    pub fn from_fn(f: impl Fn(&str, usize) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        Self {
            responder: Arc::new(f),
            calls: Arc::new(AtomicUsize::new(0)),
        }
    }

    /// Every vote answers with the same verdict.
    pub fn fixed(valid: bool, confidence: f64) -> Self {
        Self::from_fn(move |_, _| Ok(format!(r#"{{"valid": {valid}, "confidence": {confidence}, "reasoning": "stub"}}"#)))
    }

    /// Votes answer in turn from `votes` (cycled).
    pub fn votes(votes: Vec<(bool, f64)>) -> Self {
        Self::from_fn(move |_, i| {
            let (valid, c) = votes[i % votes.len()];
            Ok(format!(r#"{{"valid": {valid}, "confidence": {c}, "reasoning": "stub vote {i}"}}"#))
        })
    }

    /// Deterministic keep-everything validator used when no endpoint is configured.
    pub fn approve_all() -> Self {
        Self::fixed(true, 0.9)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl LlmBackend for StubLlm {
    async fn complete(&self, prompt: &str, vote: usize, _settings: &ValidationSettings) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.responder)(prompt, vote)
    }
}

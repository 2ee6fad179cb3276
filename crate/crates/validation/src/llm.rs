//! Client for a local inference server speaking the `/api/generate` protocol.

use std::time::Duration;

use async_trait::async_trait;
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use tracing::warn;

use crate::model::{ValidationSettings, Verdict, VerdictSource};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LlmError {
    #[error("inference endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("inference request timed out")]
    Timeout,
    #[error("inference endpoint returned status {0}")]
    Status(u16),
    #[error("malformed inference response: {0}")]
    Protocol(String),
}

/// One completion request. `vote` distinguishes the k independent requests
/// for the same prompt.
#[async_trait]
pub trait LlmBackend: Send + Sync {
    async fn complete(&self, prompt: &str, vote: usize, settings: &ValidationSettings) -> Result<String, LlmError>;
}

#[derive(Debug, Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
    options: GenerateOptions,
}

#[derive(Debug, Serialize)]
struct GenerateOptions {
    temperature: f64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
struct GenerateResponse {
    response: String,
}

#[derive(Debug, Clone)]
pub struct OllamaClient {
    http: reqwest::Client,
}

impl Default for OllamaClient {
    fn default() -> Self {
        Self::new()
    }
}

impl OllamaClient {
    pub fn new() -> Self {
        Self {
            http: reqwest::Client::new(),
        }
    }

    async fn once(&self, prompt: &str, vote: usize, settings: &ValidationSettings) -> Result<String, LlmError> {
        let url = format!("{}/api/generate", settings.endpoint.trim_end_matches('/'));
        let body = GenerateRequest {
            model: &settings.model_name,
            prompt,
            stream: false,
            options: GenerateOptions {
                temperature: settings.temperature,
                seed: vote as u64,
            },
        };
        let send = self.http.post(&url).json(&body).send();
        let resp = tokio::time::timeout(Duration::from_secs(settings.request_timeout_seconds), send)
            .await
            .map_err(|_| LlmError::Timeout)?
            .map_err(|e| LlmError::Unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(LlmError::Status(resp.status().as_u16()));
        }
        let parsed: GenerateResponse = tokio::time::timeout(Duration::from_secs(settings.request_timeout_seconds), resp.json())
            .await
            .map_err(|_| LlmError::Timeout)?
            .map_err(|e| LlmError::Protocol(e.to_string()))?;
        Ok(parsed.response)
    }
}

#[async_trait]
impl LlmBackend for OllamaClient {
    /// Sends the request, retrying once on any failure.
    async fn complete(&self, prompt: &str, vote: usize, settings: &ValidationSettings) -> Result<String, LlmError> {
        match self.once(prompt, vote, settings).await {
            Ok(text) => Ok(text),
            Err(first) => {
                warn!(error = %first, vote, "inference request failed, retrying once");
                self.once(prompt, vote, settings).await
            }
        }
    }
}

fn as_bool(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "valid" => Some(true),
            "false" | "no" | "invalid" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn as_unit(v: &Value) -> Option<f64> {
    let x = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    (0.0..=1.0).contains(&x).then_some(x)
}

fn from_json(text: &str) -> Option<Verdict> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    let obj: Value = serde_json::from_str(text.get(start..=end)?).ok()?;
    let valid = as_bool(obj.get("valid")?)?;
    let confidence = as_unit(obj.get("confidence")?)?;
    let reasoning = obj.get("reasoning").and_then(Value::as_str).unwrap_or_default();
    Some(Verdict::new(valid, confidence, reasoning, VerdictSource::Llm))
}

fn from_pairs(text: &str) -> Option<Verdict> {
    let (mut valid, mut confidence, mut reasoning) = (None, None, String::new());
    for line in text.lines() {
        let Some((k, v)) = line.split_once(['=', ':']) else { continue };
        let v = Value::String(v.trim().trim_matches(|c| c == '"' || c == ',').to_string());
        match k.trim().trim_matches('"').to_ascii_lowercase().as_str() {
            "valid" => valid = as_bool(&v),
            "confidence" => confidence = as_unit(&v),
            "reasoning" => reasoning = v.as_str().unwrap_or_default().to_string(),
            _ => {}
        }
    }
    Some(Verdict::new(valid?, confidence?, reasoning, VerdictSource::Llm))
}

/// Extracts `valid`, `confidence` and `reasoning` from generated text: a JSON
/// object anywhere in the text, else `key=value` / `key: value` lines. Anything
/// else becomes [`Verdict::parse_failure`].
pub fn parse_verdict(text: &str) -> Verdict {
    from_json(text).or_else(|| from_pairs(text)).unwrap_or_else(Verdict::parse_failure)
}

/// Issues `settings.votes_per_item` completions concurrently. Any transport
/// failure (after the backend's own retry) fails the whole item so it can be
/// retried later; malformed responses degrade to parse-failure verdicts.
pub async fn llm_validate(backend: &dyn LlmBackend, prompt: &str, settings: &ValidationSettings) -> Result<Vec<Verdict>, LlmError> {
    let calls = (0..settings.votes_per_item).map(|vote| backend.complete(prompt, vote, settings));
    join_all(calls)
        .await
        .into_iter()
        .map(|r| r.map(|text| parse_verdict(&text)))
        .collect()
}

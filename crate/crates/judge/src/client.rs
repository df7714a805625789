//! Async client for an OpenAI-compatible chat-completions endpoint.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use futures::stream::{self, StreamExt};
use msti_core::Sample;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::cache::{response_digest, CacheEntry, ScoreCache};
use crate::prompt::build_judge_prompt;
use crate::scores::{parse_judge_scores, JudgeScores};

pub const DEFAULT_AUTH_ENV: &str = "JUDGE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ImageMode {
    #[default]
    #[serde(rename = "url")]
    Url,
    #[serde(rename = "inline-base64")]
    InlineBase64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeClientConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_auth_env")]
    pub auth_env: String,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub image_mode: ImageMode,
    /// Base directory for relative image paths in inline mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_root: Option<PathBuf>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Reject fenced replies instead of unwrapping them.
    #[serde(default)]
    pub strict: bool,
}

fn default_auth_env() -> String {
    DEFAULT_AUTH_ENV.into()
}
fn default_max_retries() -> u32 {
    2
}
fn default_timeout() -> u64 {
    60
}
fn default_in_flight() -> usize {
    4
}

impl JudgeClientConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        JudgeClientConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            auth_env: default_auth_env(),
            max_retries: default_max_retries(),
            timeout_secs: default_timeout(),
            image_mode: ImageMode::Url,
            image_root: None,
            max_in_flight: default_in_flight(),
            cache_dir: None,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.endpoint.trim().is_empty() || self.model.trim().is_empty() {
            return Err(JudgeError::Config("endpoint and model are required".into()));
        }
        if self.max_in_flight == 0 || self.timeout_secs == 0 {
            return Err(JudgeError::Config("max_in_flight and timeout_secs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("invalid judge configuration: {0}")]
    Config(String),
    #[error("http client: {0}")]
    Client(String),
    #[error("runtime: {0}")]
    Runtime(#[from] std::io::Error),
}

/// Why a sample has no scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum SampleFailure {
    /// The last attempt could not reach the endpoint or got a non-success status.
    EndpointUnreachable(String),
    /// Every attempt returned an unparseable reply.
    AllRetriesFailed(String),
    ImageUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<JudgeScores>,
    /// Attempts beyond the first.
    pub retries: u32,
    pub cached: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<SampleFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub v: f64,
    pub r: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub model: String,
    pub image_mode: ImageMode,
    /// Per-sample results in input order.
    pub samples: Vec<SampleResult>,
    /// Means over scored samples; absent when none succeeded.
    pub means: Option<MeanScores>,
    pub scored: usize,
    pub failures: usize,
    pub network_calls: usize,
}

pub fn mean_scores(scores: &[JudgeScores]) -> Option<MeanScores> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let avg = |f: fn(&JudgeScores) -> u8| scores.iter().map(|s| f64::from(f(s))).sum::<f64>() / n;
    Some(MeanScores { v: avg(|s| s.v), r: avg(|s| s.r), c: avg(|s| s.c) })
}

fn mime_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("bmp") => "image/bmp",
        _ => "application/octet-stream",
    }
}

fn image_part(cfg: &JudgeClientConfig, sample: &Sample) -> Result<Option<serde_json::Value>, SampleFailure> {
    if sample.image_path.is_empty() {
        return Ok(None);
    }
    let url = match cfg.image_mode {
        ImageMode::Url => sample.image_path.clone(),
        ImageMode::InlineBase64 => {
            let path = match &cfg.image_root {
                Some(root) => root.join(&sample.image_path),
                None => PathBuf::from(&sample.image_path),
            };
            let bytes = std::fs::read(&path)
                .map_err(|e| SampleFailure::ImageUnavailable(format!("{}: {e}", path.display())))?;
            format!("data:{};base64,{}", mime_for(&path), base64::engine::general_purpose::STANDARD.encode(bytes))
        }
    };
    Ok(Some(json!({"type": "image_url", "image_url": {"url": url}})))
}

/// Chat-completions request body for one sample.
pub fn request_body(cfg: &JudgeClientConfig, sample: &Sample, response: &str) -> Result<serde_json::Value, SampleFailure> {
    let mut content = Vec::new();
    if let Some(img) = image_part(cfg, sample)? {
        content.push(img);
    }
    content.push(json!({"type": "text", "text": build_judge_prompt(sample, response)}));
    Ok(json!({
        "model": cfg.model,
        "temperature": 0,
        "messages": [{"role": "user", "content": content}],
    }))
}

enum Attempt {
    Scored(JudgeScores),
    Unparseable(String),
    Transport(String),
}

struct Judge {
    cfg: JudgeClientConfig,
    http: reqwest::Client,
    token: Option<String>,
    cache: Option<ScoreCache>,
    calls: AtomicUsize,
}

impl Judge {
    async fn attempt(&self, body: &serde_json::Value) -> Attempt {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut req = self.http.post(&self.cfg.endpoint).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Transport(e.to_string()),
        };
        let status = resp.status();
        if !status.is_success() {
            return Attempt::Transport(format!("status {status}"));
        }
        let payload: serde_json::Value = match resp.json().await {
            Ok(v) => v,
            Err(e) => return Attempt::Unparseable(format!("response body: {e}")),
        };
        let Some(content) = payload.pointer("/choices/0/message/content").and_then(|c| c.as_str()) else {
            return Attempt::Unparseable("no choices[0].message.content".into());
        };
        match parse_judge_scores(content, self.cfg.strict) {
            Ok(s) => Attempt::Scored(s),
            Err(e) => Attempt::Unparseable(e.to_string()),
        }
    }

    async fn score(&self, sample: &Sample, response: &str) -> SampleResult {
        let digest = response_digest(response);
        let mut result =
            SampleResult { sample_id: sample.id.clone(), scores: None, retries: 0, cached: false, failure: None };
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&self.cfg.model, &sample.id, &digest)) {
            result.scores = Some(hit);
            result.cached = true;
            return result;
        }
        let body = match request_body(&self.cfg, sample, response) {
            Ok(b) => b,
            Err(f) => {
                result.failure = Some(f);
                return result;
            }
        };
        let mut last = None;
        for attempt in 0..=self.cfg.max_retries {
            result.retries = attempt;
            match self.attempt(&body).await {
                Attempt::Scored(scores) => {
                    if let Some(cache) = &self.cache {
                        let entry = CacheEntry {
                            model: self.cfg.model.clone(),
                            sample_id: sample.id.clone(),
                            response_sha256: digest.clone(),
                            scores,
                        };
                        if let Err(e) = cache.put(&entry) {
                            tracing::warn!(sample = %sample.id, "cache write failed: {e}");
                        }
                    }
                    result.scores = Some(scores);
                    return result;
                }
                Attempt::Unparseable(msg) => {
                    tracing::debug!(sample = %sample.id, attempt, "unparseable judge reply: {msg}");
                    last = Some(SampleFailure::AllRetriesFailed(msg));
                }
                Attempt::Transport(msg) => {
                    tracing::debug!(sample = %sample.id, attempt, "judge request failed: {msg}");
                    last = Some(SampleFailure::EndpointUnreachable(msg));
                }
            }
        }
        tracing::warn!(sample = %sample.id, "judge gave up after {} attempts", self.cfg.max_retries + 1);
        result.failure = last;
        result
    }
}

/// Scores every `(sample, response)` pair. Per-sample failures are reported in
/// the result and excluded from the means.
pub async fn evaluate_corpus(cfg: &JudgeClientConfig, pairs: &[(Sample, String)]) -> Result<JudgeReport, JudgeError> {
    cfg.validate()?;
    let http = reqwest::Client::builder()
        .timeout(Duration::from_secs(cfg.timeout_secs))
        .build()
        .map_err(|e| JudgeError::Client(e.to_string()))?;
    let token = std::env::var(&cfg.auth_env).ok().filter(|t| !t.is_empty());
    if token.is_none() {
        tracing::warn!("{} is not set; sending unauthenticated requests", cfg.auth_env);
    }
    let judge = Arc::new(Judge {
        cfg: cfg.clone(),
        http,
        token,
        cache: cfg.cache_dir.as_ref().map(ScoreCache::new),
        calls: AtomicUsize::new(0),
    });

    let samples: Vec<SampleResult> = stream::iter(pairs.iter())
        .map(|(sample, response)| {
            let judge = Arc::clone(&judge);
            async move { judge.score(sample, response).await }
        })
        .buffered(cfg.max_in_flight)
        .collect()
        .await;

    let scored: Vec<JudgeScores> = samples.iter().filter_map(|s| s.scores).collect();
    Ok(JudgeReport {
        model: cfg.model.clone(),
        image_mode: cfg.image_mode,
        means: mean_scores(&scored),
        scored: scored.len(),
        failures: samples.len() - scored.len(),
        network_calls: judge.calls.load(Ordering::SeqCst),
        samples,
    })
}

/// [`evaluate_corpus`] on a private current-thread runtime.
pub fn evaluate_corpus_blocking(cfg: &JudgeClientConfig, pairs: &[(Sample, String)]) -> Result<JudgeReport, JudgeError> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(evaluate_corpus(cfg, pairs))
}

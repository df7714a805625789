//! Scripted chat-completions mock and the judge client contract checks.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use msti_core::{Label, Sample};
use msti_judge::{evaluate_corpus, JudgeClientConfig, JudgeReport, SampleFailure};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub enum Reply {
    Content(String),
    Status(u16),
}

pub fn scores(v: u8, r: u8, c: u8) -> Reply {
    Reply::Content(format!(r#"{{"V":{v},"R":{r},"C":{c}}}"#))
}

pub fn garbage() -> Reply {
    Reply::Content("I think this rationale is rather good.".into())
}

/// Replies are scripted per sample id; the last reply repeats once the
/// script runs out.
#[derive(Default)]
pub struct Script {
    replies: Mutex<HashMap<String, VecDeque<Reply>>>,
    pub hits: AtomicUsize,
}

impl Script {
    pub fn new(entries: Vec<(&str, Vec<Reply>)>) -> Arc<Self> {
        let replies = entries.into_iter().map(|(id, r)| (id.to_string(), r.into())).collect();
        Arc::new(Script { replies: Mutex::new(replies), hits: AtomicUsize::new(0) })
    }

    fn next(&self, id: &str) -> Reply {
        let mut map = self.replies.lock().unwrap();
        let queue = map.get_mut(id).expect("scripted sample id");
        if queue.len() > 1 {
            queue.pop_front().unwrap()
        } else {
            queue.front().cloned().unwrap()
        }
    }
}

/// Sample texts are `sample <id>`, so the id can be read back from the prompt.
fn sample_id(body: &Value) -> Option<String> {
    let content = body.pointer("/messages/0/content")?.as_array()?;
    let text = content.iter().find_map(|p| p.get("text").and_then(Value::as_str))?;
    let line = text.lines().find(|l| l.trim_start().starts_with("2. Text: sample "))?;
    Some(line.trim_start().trim_start_matches("2. Text: sample ").to_string())
}

async fn handler(State(script): State<Arc<Script>>, Json(body): Json<Value>) -> Response {
    script.hits.fetch_add(1, Ordering::SeqCst);
    let Some(id) = sample_id(&body) else {
        return (StatusCode::BAD_REQUEST, "no sample id").into_response();
    };
    match script.next(&id) {
        Reply::Content(c) => Json(json!({
            "id": "cmpl-mock",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": c}, "finish_reason": "stop"}],
        }))
        .into_response(),
        Reply::Status(code) => StatusCode::from_u16(code).unwrap().into_response(),
    }
}

pub async fn spawn_mock(script: Arc<Script>) -> SocketAddr {
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(script);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

pub fn pairs(ids: &[&str]) -> Vec<(Sample, String)> {
    ids.iter()
        .map(|id| (Sample::new(*id, format!("sample {id}"), Label::Sarcastic), format!("<Think>{id}</Think>")))
        .collect()
}

pub fn config(addr: SocketAddr) -> JudgeClientConfig {
    JudgeClientConfig {
        auth_env: "MSTI_TEST_UNSET_JUDGE_TOKEN".into(),
        timeout_secs: 5,
        ..JudgeClientConfig::new(format!("http://{addr}/v1/chat/completions"), "mock-judge")
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

async fn run(cfg: &JudgeClientConfig, ids: &[&str]) -> Result<JudgeReport, String> {
    evaluate_corpus(cfg, &pairs(ids)).await.map_err(|e| e.to_string())
}

pub async fn constant_means() -> Result<(), String> {
    let script = Script::new(vec![("a", vec![scores(4, 3, 5)]), ("b", vec![scores(4, 3, 5)]), ("c", vec![scores(4, 3, 5)])]);
    let addr = spawn_mock(script.clone()).await;
    let r = run(&config(addr), &["a", "b", "c"]).await?;
    let m = r.means.clone().ok_or("no means")?;
    ensure((m.v, m.r, m.c) == (4.0, 3.0, 5.0), || format!("means {m:?}"))?;
    ensure(r.failures == 0 && r.scored == 3 && r.network_calls == 3, || format!("{r:?}"))?;
    ensure(script.hits.load(Ordering::SeqCst) == 3, || "mock hit count".into())
}

pub async fn retries_then_success() -> Result<(), String> {
    let script = Script::new(vec![("a", vec![garbage(), Reply::Content("```json\n{\"V\":9}\n```".into()), scores(2, 2, 3)])]);
    let addr = spawn_mock(script).await;
    let r = run(&config(addr), &["a"]).await?;
    let s = &r.samples[0];
    ensure(s.retries == 2 && s.scores.is_some() && s.failure.is_none(), || format!("{s:?}"))?;
    ensure(r.network_calls == 3, || format!("{} calls", r.network_calls))
}

pub async fn exclusion() -> Result<(), String> {
    let script = Script::new(vec![
        ("a", vec![scores(4, 3, 5)]),
        ("bad", vec![garbage()]),
        ("b", vec![scores(2, 3, 4)]),
        ("down", vec![Reply::Status(503)]),
    ]);
    let addr = spawn_mock(script).await;
    let r = run(&config(addr), &["a", "bad", "b"]).await?;
    ensure(r.failures == 1 && r.scored == 2, || format!("{r:?}"))?;
    ensure(matches!(r.samples[1].failure, Some(SampleFailure::AllRetriesFailed(_))), || format!("{:?}", r.samples[1]))?;
    let m = r.means.clone().ok_or("no means")?;
    ensure((m.v, m.r, m.c) == (3.0, 3.0, 4.5), || format!("means {m:?}"))?;
    ensure(r.network_calls == 1 + 3 + 1, || format!("{} calls", r.network_calls))?;

    let r = run(&config(addr), &["down"]).await?;
    ensure(matches!(r.samples[0].failure, Some(SampleFailure::EndpointUnreachable(_))), || format!("{r:?}"))?;
    ensure(r.means.is_none() && r.failures == 1, || format!("{r:?}"))
}

pub async fn cache_idempotence() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = Script::new(vec![("a", vec![scores(5, 4, 3)]), ("b/../x", vec![scores(1, 2, 3)])]);
    let addr = spawn_mock(script.clone()).await;
    let cfg = JudgeClientConfig { cache_dir: Some(dir.path().into()), ..config(addr) };
    let first = run(&cfg, &["a", "b/../x"]).await?;
    let second = run(&cfg, &["a", "b/../x"]).await?;
    ensure(first.network_calls == 2 && second.network_calls == 0, || {
        format!("calls {} then {}", first.network_calls, second.network_calls)
    })?;
    ensure(second.samples.iter().all(|s| s.cached), || "second run not served from cache".into())?;
    ensure(first.means == second.means, || "means changed across reruns".into())?;
    ensure(script.hits.load(Ordering::SeqCst) == 2, || "mock saw extra requests".into())?;
    // A different response for the same sample is a different key.
    let mut changed = pairs(&["a"]);
    changed[0].1.push('!');
    let third = evaluate_corpus(&cfg, &changed).await.map_err(|e| e.to_string())?;
    ensure(third.network_calls == 1, || "edited response hit the cache".into())
}

/// Every judge contract scenario against fresh mocks.
pub fn check_judge_contract() -> Result<String, String> {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        constant_means().await.map_err(|e| format!("constant means: {e}"))?;
        retries_then_success().await.map_err(|e| format!("retry: {e}"))?;
        exclusion().await.map_err(|e| format!("exclusion: {e}"))?;
        cache_idempotence().await.map_err(|e| format!("cache: {e}"))?;
        Ok("means (4,3,5), 2 retries then success, failed sample excluded, rerun makes 0 calls".to_string())
    })
}

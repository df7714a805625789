//! Service harness: golden endpoint cases and the concurrency check.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;

use msti_cli::service::router;
use msti_core::RewardConfig;

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Set `MSTI_BLESS=1` to rewrite golden files from current output.
pub fn blessing() -> bool {
    std::env::var_os("MSTI_BLESS").is_some()
}

pub async fn spawn_service() -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(RewardConfig::default())).await.unwrap() });
    addr
}

pub struct GoldenCase {
    pub name: &'static str,
    pub path: &'static str,
    /// Request body file; `None` means GET.
    pub request: Option<&'static str>,
    pub status: u16,
    pub response: &'static str,
}

pub const GOLDEN_CASES: [GoldenCase; 4] = [
    GoldenCase {
        name: "reward",
        path: "/v1/reward",
        request: Some("reward_request.json"),
        status: 200,
        response: "reward_response.json",
    },
    GoldenCase { name: "healthz", path: "/healthz", request: None, status: 200, response: "healthz_response.json" },
    GoldenCase {
        name: "group too small",
        path: "/v1/reward",
        request: Some("reward_group_too_small_request.json"),
        status: 400,
        response: "reward_group_too_small_response.json",
    },
    GoldenCase {
        name: "parse",
        path: "/v1/parse",
        request: Some("parse_request.json"),
        status: 200,
        response: "parse_response.json",
    },
];

pub async fn call(client: &reqwest::Client, addr: SocketAddr, path: &str, body: Option<String>) -> (u16, String) {
    let url = format!("http://{addr}{path}");
    let req = match body {
        Some(b) => client.post(url).header("content-type", "application/json").body(b),
        None => client.get(url),
    };
    let resp = req.send().await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.text().await.unwrap())
}

pub async fn golden_cases(addr: SocketAddr) -> Result<(), String> {
    let client = reqwest::Client::new();
    for case in &GOLDEN_CASES {
        let body = case.request.map(golden);
        let (status, text) = call(&client, addr, case.path, body).await;
        if blessing() {
            std::fs::write(golden_dir().join(case.response), format!("{text}\n")).unwrap();
        }
        if status != case.status {
            return Err(format!("{}: status {status}, expected {}", case.name, case.status));
        }
        if text != golden(case.response).trim_end_matches('\n') {
            return Err(format!("{}: body differs from {}:\n{text}", case.name, case.response));
        }
    }
    Ok(())
}

pub async fn concurrent_identical(addr: SocketAddr, n: usize) -> Result<(), String> {
    let client = reqwest::Client::new();
    let body = golden("reward_request.json");
    let calls = (0..n).map(|_| call(&client, addr, "/v1/reward", Some(body.clone())));
    let results = futures::future::join_all(calls).await;
    let first = &results[0];
    if first.0 != 200 {
        return Err(format!("status {}", first.0));
    }
    match results.iter().position(|r| r != first) {
        Some(i) => Err(format!("response {i} differs: {:?}", results[i])),
        None => Ok(()),
    }
}

pub fn check_service() -> Result<String, String> {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let addr = spawn_service().await;
        golden_cases(addr).await?;
        concurrent_identical(addr, 100).await?;
        Ok(format!("{} golden endpoint cases byte-identical; 100 concurrent /v1/reward bodies identical", GOLDEN_CASES.len()))
    })
}

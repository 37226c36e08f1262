#![allow(dead_code)]

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lpchat_gateway::{ChatBackend, ChatMessage, Gateway, GatewayError, ScriptedBackend};
use lpchat_service::{router, AppState, ServiceConfig};
use serde_json::Value;
use tower::ServiceExt;

pub fn config(dir: &Path, extra: &str) -> ServiceConfig {
    let text = format!(
        "data_dir = {:?}\n{extra}\n[backend]\nkind = \"scripted\"\n",
        dir.to_string_lossy()
    );
    ServiceConfig::from_toml(&text).expect("test config")
}

pub fn app_with(dir: &Path, extra: &str, backend: Arc<dyn ChatBackend>) -> (Arc<AppState>, Router) {
    let state = AppState::new(config(dir, extra), Gateway::new(backend)).expect("state");
    let r = router(state.clone());
    (state, r)
}

pub fn app(dir: &Path, backend: ScriptedBackend) -> (Arc<AppState>, Router) {
    app_with(dir, "", Arc::new(backend))
}

pub async fn call(r: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    send(r, req).await
}

pub async fn upload(r: &Router, id: &str, name: &str, bytes: Vec<u8>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(Method::POST)
        .uri(format!("/v1/sessions/{id}/files?name={name}"))
        .body(Body::from(bytes))
        .unwrap();
    send(r, req).await
}

async fn send(r: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = r.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes)
        .unwrap_or_else(|e| panic!("non-JSON response ({status}): {e}: {}", String::from_utf8_lossy(&bytes)));
    (status, v)
}

pub async fn create(r: &Router) -> String {
    let (s, v) = call(r, Method::POST, "/v1/sessions", None).await;
    assert_eq!(s, StatusCode::CREATED);
    v["id"].as_str().unwrap().to_string()
}

pub async fn say(r: &Router, id: &str, text: &str) -> (StatusCode, Value) {
    call(
        r,
        Method::POST,
        &format!("/v1/sessions/{id}/messages"),
        Some(serde_json::json!({ "text": text })),
    )
    .await
}

/// Sleeps on every call and records the largest number of calls in flight.
pub struct SlowBackend {
    pub delay: Duration,
    pub reply: String,
    in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub calls: AtomicUsize,
}

impl SlowBackend {
    pub fn new(delay: Duration, reply: &str) -> Self {
        SlowBackend {
            delay,
            reply: reply.to_string(),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }
}

impl ChatBackend for SlowBackend {
    fn name(&self) -> &str {
        "slow"
    }

    fn complete(&self, _messages: &[ChatMessage]) -> Result<String, GatewayError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(self.delay);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        Ok(self.reply.clone())
    }
}

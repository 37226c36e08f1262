mod common;

use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::{Method, StatusCode};
use common::{app_with, call, create, say, SlowBackend};
use lpchat_pipeline::{SessionView, Status};
use lpchat_service::api::{ErrorResponse, ReplyResponse};

const RELEVANT: &str = "{\"relevant\": true}";

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn one_run_per_session_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let backend = Arc::new(SlowBackend::new(Duration::from_millis(150), RELEVANT));
    let (_, r) = app_with(dir.path(), "", backend.clone());
    let id = create(&r).await;

    let mut tasks = Vec::new();
    for i in 0..8 {
        let (r, id) = (r.clone(), id.clone());
        tasks.push(tokio::spawn(async move { say(&r, &id, &format!("maximize profit {i}")).await }));
    }
    let mut ok = 0;
    let mut conflicts = 0;
    for t in tasks {
        let (s, v) = t.await.unwrap();
        match s {
            StatusCode::CONFLICT => {
                let e: ErrorResponse = serde_json::from_value(v).unwrap();
                assert_eq!(e.code, "conflict");
                conflicts += 1;
            }
            other => {
                assert!(other.is_success() || other == StatusCode::BAD_GATEWAY, "{other} {v}");
                ok += 1;
            }
        }
    }
    assert_eq!((ok, conflicts), (1, 7));
    assert_eq!(backend.max_in_flight.load(Ordering::SeqCst), 1);

    let (_, v) = call(&r, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    let view: SessionView = serde_json::from_value(v).unwrap();
    assert_ne!(view.status, Status::Running);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn different_sessions_run_in_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let backend = Arc::new(SlowBackend::new(Duration::from_millis(300), RELEVANT));
    let (_, r) = app_with(dir.path(), "", backend.clone());
    let a = create(&r).await;
    let b = create(&r).await;
    let (ra, rb) = (r.clone(), r.clone());
    let ta = tokio::spawn(async move { say(&ra, &a, "maximize output").await });
    let tb = tokio::spawn(async move { say(&rb, &b, "minimize cost").await });
    let (sa, _) = ta.await.unwrap();
    let (sb, _) = tb.await.unwrap();
    assert_ne!(sa, StatusCode::CONFLICT);
    assert_ne!(sb, StatusCode::CONFLICT);
    assert_eq!(backend.max_in_flight.load(Ordering::SeqCst), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slow_runs_answer_running_and_finish_in_background() {
    let dir = tempfile::tempdir().unwrap();
    let backend = Arc::new(SlowBackend::new(Duration::from_millis(400), RELEVANT));
    let (_, r) = app_with(dir.path(), "reply_budget_secs = 0.05", backend.clone());
    let id = create(&r).await;

    let (s, v) = say(&r, &id, "maximize output").await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    let pending: ReplyResponse = serde_json::from_value(v).unwrap();
    assert!(pending.reply.is_none());
    assert_eq!(pending.session.status, Status::Running);

    let (s, v) = call(&r, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_value::<SessionView>(v).unwrap().status, Status::Running);
    let (s, _) = say(&r, &id, "another").await;
    assert_eq!(s, StatusCode::CONFLICT);

    let deadline = Instant::now() + Duration::from_secs(20);
    let view = loop {
        let (_, v) = call(&r, Method::GET, &format!("/v1/sessions/{id}"), None).await;
        let view: SessionView = serde_json::from_value(v).unwrap();
        if view.status != Status::Running {
            break view;
        }
        assert!(Instant::now() < deadline, "run never finished");
        tokio::time::sleep(Duration::from_millis(50)).await;
    };
    assert_eq!(view.turns.len(), 1);
    assert_eq!(view.turns[0].user, "maximize output");
}

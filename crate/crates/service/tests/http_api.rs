mod common;

use axum::http::{Method, StatusCode};
use common::{app, app_with, call, create, say, upload};
use lpchat_gateway::ScriptedBackend;
use lpchat_pipeline::fixtures::{
    capacity_fixtures, coffee_fixtures, CAPACITY_DESCRIPTION, CAPACITY_FILE, COFFEE_TURNS, OFF_TOPIC,
};
use lpchat_pipeline::prompts::{relevance_prompt, GUIDANCE};
use lpchat_pipeline::{SessionView, Status};
use lpchat_service::api::{CreatedResponse, ErrorResponse, FileResponse, ReplyResponse};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Parses `v` as `T` and checks nothing was lost or added on the way.
fn typed<T: serde::de::DeserializeOwned + serde::Serialize>(v: &Value) -> T {
    let t: T = serde_json::from_value(v.clone()).unwrap_or_else(|e| panic!("schema mismatch: {e}: {v}"));
    assert_eq!(&serde_json::to_value(&t).unwrap(), v, "body does not round-trip");
    t
}

fn as_reply(v: &Value) -> ReplyResponse {
    typed(v)
}

fn as_error(v: &Value) -> ErrorResponse {
    typed(v)
}

async fn coffee_session(r: &axum::Router) -> (String, Vec<ReplyResponse>) {
    let id = create(r).await;
    let mut replies = Vec::new();
    for turn in COFFEE_TURNS {
        let (s, v) = say(r, &id, turn).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        replies.push(as_reply(&v));
    }
    (id, replies)
}

#[tokio::test]
async fn create_and_get() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = app(dir.path(), ScriptedBackend::default());
    let (s, v) = call(&r, Method::POST, "/v1/sessions", None).await;
    assert_eq!(s, StatusCode::CREATED);
    let created: CreatedResponse = typed(&v);
    assert_eq!(created.session.status, Status::Gathering);

    let (s, v) = call(&r, Method::GET, &format!("/v1/sessions/{}", created.id), None).await;
    assert_eq!(s, StatusCode::OK);
    let view: SessionView = serde_json::from_value(v).unwrap();
    assert_eq!(view, created.session);

    for uri in ["/v1/sessions/nope", "/v1/sessions/..%2Fetc", "/v2/other"] {
        let (s, v) = call(&r, Method::GET, uri, None).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(as_error(&v).code, "not_found");
    }
}

#[tokio::test]
async fn coffee_conversation_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = app(dir.path(), coffee_fixtures());
    let (id, replies) = coffee_session(&r).await;
    assert_eq!(replies[0].session.status, Status::Gathering);
    assert_eq!(replies[1].session.status, Status::Gathering);
    assert!(replies[0].session.visible.formulation.is_none());
    let last = &replies[2];
    assert_eq!(last.session.status, Status::Solved);
    assert!(last.reply.as_deref().unwrap().contains("110"), "{:?}", last.reply);
    let result = last.session.visible.solve_result.as_ref().unwrap();
    assert_eq!(result.objective_value, Some(110.0));
    assert_eq!(last.session.turns.len(), 3);

    let (s, v) = call(&r, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_value::<SessionView>(v).unwrap(), last.session);
}

#[tokio::test]
async fn off_topic_gets_guidance_and_bad_bodies_get_400() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = ScriptedBackend::default();
    b.insert(&relevance_prompt(OFF_TOPIC), "{\"relevant\": false}");
    let (_, r) = app(dir.path(), b);
    let id = create(&r).await;
    let (s, v) = say(&r, &id, OFF_TOPIC).await;
    assert_eq!(s, StatusCode::OK);
    let reply = as_reply(&v);
    assert_eq!(reply.reply.as_deref(), Some(GUIDANCE));
    assert!(reply.session.visible.description.is_none());

    let (s, v) = say(&r, &id, "   ").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(as_error(&v).code, "bad_request");

    let (s, v) = call(&r, Method::POST, &format!("/v1/sessions/{id}/messages"), Some(json!({"txt": 1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    as_error(&v);
}

#[tokio::test]
async fn backend_failure_is_502() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = app(dir.path(), ScriptedBackend::default());
    let id = create(&r).await;
    let (s, v) = say(&r, &id, "maximize profit from chairs").await;
    assert_eq!(s, StatusCode::BAD_GATEWAY, "{v}");
    assert_eq!(as_error(&v).code, "backend_unavailable");
}

#[tokio::test]
async fn uploads_are_checked_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (state, r) = app_with(dir.path(), "max_upload_bytes = 64", std::sync::Arc::new(capacity_fixtures()));
    let id = create(&r).await;

    let csv = b"cap\n17.5\n".to_vec();
    let (s, v) = upload(&r, &id, CAPACITY_FILE, csv.clone()).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let file: FileResponse = typed(&v);
    assert_eq!(file.size, csv.len() as u64);
    assert_eq!(file.sha256, hex::encode(Sha256::digest(&csv)));
    assert!(file.session.files.contains_key(CAPACITY_FILE));
    let stored = std::fs::read(state.store().files_dir(&id).join(CAPACITY_FILE)).unwrap();
    assert_eq!(stored, csv);

    let (s, v) = upload(&r, &id, "notes.txt", b"hi".to_vec()).await;
    assert_eq!(s, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    as_error(&v);
    let (s, _) = upload(&r, &id, "..%2Fescape.csv", b"a\n1\n".to_vec()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = upload(&r, &id, "big.csv", vec![b'1'; 65]).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(as_error(&v).code, "too_large");
    let other = create(&r).await;
    let (s, _) = upload(&r, &other, "exact.csv", vec![b'1'; 64]).await;
    assert_eq!(s, StatusCode::CREATED);

    let (s, v) = say(&r, &id, CAPACITY_DESCRIPTION).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let reply = as_reply(&v);
    assert_eq!(reply.session.status, Status::Solved, "{v}");
    let result = reply.session.visible.solve_result.unwrap();
    assert_eq!(result.value("x"), Some(17.5));
}

#[tokio::test]
async fn edits_solve_and_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = app(dir.path(), coffee_fixtures());
    let id = create(&r).await;

    let (s, v) = call(&r, Method::POST, &format!("/v1/sessions/{id}/solve"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(as_error(&v).code, "not_ready");
    let (s, _) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/artifacts/code"),
        Some(json!({"content": "x"})),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (id, replies) = {
        drop(id);
        coffee_session(&r).await
    };
    let code = replies[2].session.visible.code.clone().unwrap().text;

    let (s, v) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/artifacts/code"),
        Some(json!({"content": "maximize 4*lattes +"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    let err = as_error(&v);
    assert!(!err.diagnostics.is_empty());
    assert!(err.diagnostics[0].span.line >= 1);
    assert_eq!(err.session.unwrap().status, Status::Failed);

    let (s, v) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/artifacts/code"),
        Some(json!({ "content": code })),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(as_reply(&v).session.status, Status::Solved);

    let (s, v) = call(&r, Method::POST, &format!("/v1/sessions/{id}/solve"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(as_reply(&v).session.status, Status::Solved);

    let (s, _) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/artifacts/objective"),
        Some(json!({"content": ""})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, v) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/visibility"),
        Some(json!({"show_code": false})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let view: SessionView = typed(&v);
    assert!(view.visible.code.is_none());
    assert!(view.visible.formulation.is_some());
    assert!(!view.visibility.show_code && view.visibility.show_formulas);

    let (s, v) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/visibility"),
        Some(json!({"show_formulas": false, "show_code": true})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let view: SessionView = serde_json::from_value(v).unwrap();
    assert!(view.visible.formulation.is_none());
    assert_eq!(view.visible.code.map(|c| c.text), Some(code));
}

#[tokio::test]
async fn formulation_edit_to_an_infeasible_model_still_answers() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = app(dir.path(), coffee_fixtures());
    let (id, _) = coffee_session(&r).await;
    let mut f: Value = serde_json::from_str(lpchat_pipeline::fixtures::COFFEE_FORMULATION).unwrap();
    f["constraints"]
        .as_array_mut()
        .unwrap()
        .push(json!({"name": "min_lattes", "terms": {"lattes": 1}, "sense": ">=", "rhs": 25}));
    let (s, v) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/artifacts/formulation"),
        Some(json!({ "content": f.to_string() })),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let reply = as_reply(&v);
    let code = reply.session.visible.code.as_ref().unwrap();
    assert!(code.text.contains("min_lattes"), "{}", code.text);
    let result = reply.session.visible.solve_result.as_ref().unwrap();
    assert_eq!(result.status, lpchat_core::solver::SolveStatus::Infeasible);
    // 2 * lattes <= 40 and lattes >= 25 cannot both hold.
    let text = reply.reply.unwrap();
    assert!(text.contains("no assignment satisfies all constraints"), "{text}");

    let (s, v) = call(&r, Method::POST, &format!("/v1/sessions/{id}/solve"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(
        as_reply(&v).session.visible.solve_result.unwrap().status,
        lpchat_core::solver::SolveStatus::Infeasible
    );

    let (s, v) = call(
        &r,
        Method::PUT,
        &format!("/v1/sessions/{id}/artifacts/formulation"),
        Some(json!({"content": "{\"variables\": [}"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let err = as_error(&v);
    assert_eq!(err.session.unwrap().status, Status::Failed);
    let (s, _) = call(&r, Method::POST, &format!("/v1/sessions/{id}/solve"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

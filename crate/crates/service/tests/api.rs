use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use tusample::engine::{Disambiguator, EngineConfig};
use tusample::sampler::{SamplerConfig, SamplerState, Strategy};
use tusample::synth::{generate_synthetic, SyntheticConfig};
use tusample_service::api::{router, Session, Shared};

fn session(per_sense: usize) -> Shared {
    let s = generate_synthetic(&SyntheticConfig {
        examples_per_sense: per_sense,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let all = s.examples.into_vec();
    let engine = Disambiguator::new(Arc::new(s.thesaurus), None, EngineConfig::default()).unwrap();
    let held = all.len() / 5;
    let st = SamplerState::from_scratch(engine, SamplerConfig::default(), all[held..].to_vec(), all[..held].to_vec(), 0)
        .unwrap();
    Arc::new(RwLock::new(Session::new(st, Strategy::tu(1), json!({"k": 1}))))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn labeled(state: &Value) -> u64 {
    state["counts"]["labeled"].as_u64().unwrap()
}

#[tokio::test]
async fn ten_rounds_of_next_and_label() {
    let app = router(session(20));
    let (_, start) = call(&app, "GET", "/api/state", None).await;
    for _ in 0..10 {
        let (status, q) = call(&app, "GET", "/api/next", None).await;
        assert_eq!(status, StatusCode::OK);
        let id = q["example"]["id"].as_str().unwrap().to_string();
        let sense = q["example"]["gold_sense"].clone();
        let candidates: Vec<Value> = q["candidates"].as_array().unwrap().clone();
        assert!(candidates.contains(&sense));
        assert_eq!(q["report"]["example_id"], json!(id));
        let (status, counts) = call(&app, "POST", "/api/label", Some(json!({"example_id": id, "sense": sense}))).await;
        assert_eq!(status, StatusCode::OK);
        assert!(counts["held_out_accuracy"].is_number());
    }
    let (_, end) = call(&app, "GET", "/api/state", None).await;
    assert_eq!(labeled(&end), labeled(&start) + 10);
    assert_eq!(end["strategy"]["name"], "tu");
    let (_, curve) = call(&app, "GET", "/api/curve", None).await;
    assert_eq!(curve.as_array().unwrap().len(), 10);
    assert_eq!(curve[9]["labels"], 10);
}

#[tokio::test]
async fn next_is_stable_until_labeled() {
    let app = router(session(10));
    let (_, a) = call(&app, "GET", "/api/next", None).await;
    let (_, b) = call(&app, "GET", "/api/next", None).await;
    assert_eq!(a["example"]["id"], b["example"]["id"]);
    let (_, st) = call(&app, "GET", "/api/state", None).await;
    assert_eq!(st["pending"], a["example"]["id"]);
}

#[tokio::test]
async fn label_errors_leave_state_alone() {
    let shared = session(10);
    let app = router(shared.clone());
    let (_, q) = call(&app, "GET", "/api/next", None).await;
    let id = q["example"]["id"].as_str().unwrap().to_string();
    let sense = q["example"]["gold_sense"].clone();
    let (_, before) = call(&app, "GET", "/api/state", None).await;

    let (status, _) = call(&app, "POST", "/api/label", Some(json!({"example_id": id, "sense": "nope"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", "/api/label", Some(json!({"example_id": "not-pending", "sense": sense}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, after) = call(&app, "GET", "/api/state", None).await;
    assert_eq!(before, after);

    let body = json!({"example_id": id, "sense": sense});
    assert_eq!(call(&app, "POST", "/api/label", Some(body.clone())).await.0, StatusCode::OK);
    assert_eq!(call(&app, "POST", "/api/label", Some(body)).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn exhausted_pool_is_gone() {
    let shared = session(3);
    let app = router(shared.clone());
    loop {
        let (status, q) = call(&app, "GET", "/api/next", None).await;
        if status == StatusCode::GONE {
            break;
        }
        let body = json!({"example_id": q["example"]["id"], "sense": q["example"]["gold_sense"]});
        assert_eq!(call(&app, "POST", "/api/label", Some(body)).await.0, StatusCode::OK);
    }
    let (_, st) = call(&app, "GET", "/api/state", None).await;
    assert_eq!(st["counts"]["pool"], 0);
}

#[tokio::test]
async fn example_endpoint() {
    let app = router(session(5));
    let (_, q) = call(&app, "GET", "/api/next", None).await;
    let id = q["example"]["id"].as_str().unwrap().to_string();
    let (status, ex) = call(&app, "GET", &format!("/api/example/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ex["role"], "pool");
    assert_eq!(ex["report"], q["report"]);
    let body = json!({"example_id": id, "sense": q["example"]["gold_sense"]});
    call(&app, "POST", "/api/label", Some(body)).await;
    let (_, ex) = call(&app, "GET", &format!("/api/example/{id}"), None).await;
    assert_eq!(ex["role"], "labeled");
    assert_eq!(ex["assigned_sense"], q["example"]["gold_sense"]);
    assert_eq!(call(&app, "GET", "/api/example/missing", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn replayed_request_log_gives_same_database() {
    let mut log = Vec::new();
    let a = session(8);
    let app = router(a.clone());
    for _ in 0..6 {
        let (_, q) = call(&app, "GET", "/api/next", None).await;
        let body = json!({"example_id": q["example"]["id"], "sense": q["example"]["gold_sense"]});
        call(&app, "POST", "/api/label", Some(body.clone())).await;
        log.push(body);
    }
    let b = session(8);
    let app_b = router(b.clone());
    for body in log {
        call(&app_b, "GET", "/api/next", None).await;
        assert_eq!(call(&app_b, "POST", "/api/label", Some(body)).await.0, StatusCode::OK);
    }
    assert_eq!(a.read().unwrap().state.db(), b.read().unwrap().state.db());
}

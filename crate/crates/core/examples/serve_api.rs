//! Drive the REST API in-process: create a session, start a day and make a
//! choice.

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request};
use fieldwork::service::{build_engine, router, AppState, ServiceConfig, SessionStore};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, body: Value) -> Value {
    let req = Request::builder().method(&method).uri(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let v: Value = serde_json::from_slice(&to_bytes(res.into_body(), usize::MAX).await.unwrap()).unwrap();
    println!("{method} {uri} -> {status}");
    v
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store_dir = tempfile::tempdir()?;
    let mut config = ServiceConfig::default();
    config.server.image_dir = None;
    let engine = Arc::new(build_engine(&config)?);
    let app = router(AppState::new(engine, SessionStore::open(store_dir.path())?));

    tokio::runtime::Runtime::new()?.block_on(async {
        call(&app, Method::POST, "/sessions", json!({"id": "demo", "seed": 7})).await;
        let turn = call(&app, Method::POST, "/sessions/demo/turn", json!({})).await;
        println!("  loading quote: {}", turn["result"]["loading_quote"]);
        let day = &turn["session"]["current"];
        println!("  choices: {}", day["choices"]);
        let after = call(&app, Method::POST, "/sessions/demo/choice", json!({"index": 1})).await;
        println!("  phase {} on day {}", after["session"]["phase"], after["session"]["day"]);
        let err = call(&app, Method::POST, "/sessions/demo/choice", json!({"index": 9})).await;
        println!("  error: {}", err["code"]);
    });
    Ok(())
}

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use unl_deconv::lexicon::CountStore;
use unl_deconv::pipeline::Lingware;
use unl_deconv_service::{router, AppState};

fn lingware_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/lingware")
}

fn corpus(names: &[&str]) -> String {
    names
        .iter()
        .map(|n| std::fs::read_to_string(lingware_dir().join("corpus").join(n)).unwrap())
        .collect::<Vec<_>>()
        .join("\n")
}

fn app_with(dir: Option<std::path::PathBuf>) -> Arc<AppState> {
    let lw = Lingware::load_dir(&lingware_dir().join("fr-demo")).unwrap();
    AppState::new(lw, CountStore::in_memory(), dir)
}

async fn call(app: &Arc<AppState>, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(app.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

async fn session(app: &Arc<AppState>, files: &[&str]) -> String {
    let (st, v) = call(app, Method::POST, "/sessions", Some(json!({ "document": corpus(files) }))).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    let s = v["session"].as_str().unwrap().to_string();
    let (st, v) = call(app, Method::POST, &format!("/sessions/{s}/deconvert"), None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    s
}

fn plain(v: &Value, k: usize) -> String {
    v["utterances"][k]["plain"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn create_and_deconvert() {
    let app = app_with(None);
    let (st, v) = call(&app, Method::POST, "/sessions", Some(json!({ "document": corpus(&["cat-eats-mouse.unl", "dog-not-meat.unl"]) }))).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(v["utterances"].as_array().unwrap().len(), 2);
    assert_eq!(v["utterances"][0]["validation"]["ok"], true);
    let s = v["session"].as_str().unwrap();
    let (st, v) = call(&app, Method::POST, &format!("/sessions/{s}/deconvert"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(plain(&v, 0), "Le chat mange la souris.");
    assert_eq!(plain(&v, 1), "Le chien ne mange pas la viande.");
    assert!(v["utterances"][0]["text"].as_str().unwrap().contains("&"));
    assert_eq!(v["utterances"][0]["version"], 1);
}

#[tokio::test]
async fn trace_of_content_and_unknown_tokens() {
    let app = app_with(None);
    let s = session(&app, &["cat-eats-mouse.unl"]).await;
    let (_, u) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u1"), None).await;
    let tokens = u["tokens"].as_array().unwrap();
    let content = tokens.iter().find(|t| t["created"] == false).unwrap();
    let i = content["index"].as_u64().unwrap();
    let (st, v) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u1/tokens/{i}/trace"), None).await;
    assert_eq!(st, StatusCode::OK);
    let chain = v["chain"].as_array().unwrap();
    assert_eq!(chain.len(), 5);
    assert_eq!(chain[4]["stage"], "unl");
    let (st, v) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u1/tokens/999/trace"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["chain"], json!([]));
}

#[tokio::test]
async fn widened_candidates_are_a_superset() {
    let app = app_with(None);
    let s = session(&app, &["teacher-finds-armchair.unl"]).await;
    let base = format!("/sessions/{s}/utterances/u1/nodes/3/candidates");
    let (st, narrow) = call(&app, Method::GET, &format!("{base}?widen=false"), None).await;
    assert_eq!(st, StatusCode::OK);
    let (_, wide) = call(&app, Method::GET, &format!("{base}?widen=true"), None).await;
    let lus = |v: &Value| -> Vec<String> { v["candidates"].as_array().unwrap().iter().map(|c| c["lu"].as_str().unwrap().to_string()).collect() };
    let (n, w) = (lus(&narrow), lus(&wide));
    assert!(!n.is_empty());
    assert!(n.iter().all(|x| w.contains(x)), "{n:?} not in {w:?}");
    assert!(w.len() > n.len());
    assert_eq!(narrow["original"], "armchair(icl>furniture)");
}

#[tokio::test]
async fn choose_changes_the_word_and_stale_versions_conflict() {
    let app = app_with(None);
    let s = session(&app, &["teacher-finds-chair.unl"]).await;
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u1"), None).await;
    assert_eq!(v["plain"], "Le professeur trouve un fauteuil.");
    let version = v["version"].as_u64().unwrap();
    let old_marks = v["text"].as_str().unwrap().to_string();
    let uri = format!("/sessions/{s}/utterances/u1/nodes/3/choose");
    let (st, v) = call(&app, Method::POST, &uri, Some(json!({ "lu": "chaise", "version": version }))).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["plain"], "Le professeur trouve une chaise.");
    assert_eq!(v["regenerated"], true);
    assert_ne!(v["text"].as_str().unwrap(), old_marks);
    assert!(v["text"].as_str().unwrap().contains("chaise&"));
    // a second client still holding the old version
    let (st, v) = call(&app, Method::POST, &uri, Some(json!({ "lu": "fauteuil", "version": version }))).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["error"], "stale-version");
    let (st, _) = call(&app, Method::POST, &uri, Some(json!({ "lu": "voiture" }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn interlingual_attribute_and_export() {
    let app = app_with(None);
    let input = corpus(&["cat-eats-mouse.unl"]);
    let s = session(&app, &["cat-eats-mouse.unl"]).await;
    let (st, v) = call(&app, Method::GET, &format!("/sessions/{s}/export"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v.as_str().unwrap(), input);
    let uri = format!("/sessions/{s}/utterances/u1/nodes/2/attributes");
    let (st, v) = call(&app, Method::POST, &uri, Some(json!({ "name": "number", "value": "pl", "level": "interlingual" }))).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["plain"], "Les chats mangent la souris.");
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{s}/export"), None).await;
    let out = v.as_str().unwrap();
    let changed: Vec<(&str, &str)> = input.lines().zip(out.lines().filter(|l| !l.starts_with(';'))).filter(|(a, b)| a != b).collect();
    assert_eq!(changed, vec![(
        "agt(eat(icl>consume).@entry, cat(icl>animal).@def)",
        "agt(eat(icl>consume).@entry, cat(icl>animal).@def.@pl)"
    )]);
    assert!(out.starts_with("; proposed revision"));
    let (st, _) = call(&app, Method::POST, &uri, Some(json!({ "name": "number", "value": "dual", "level": "interlingual" }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn replace_regenerates_matching_utterances() {
    let app = app_with(None);
    let s = session(&app, &["teacher-finds-chair.unl", "cat-eats-mouse.unl", "teacher-finds-chair.unl"]).await;
    let (st, v) = call(&app, Method::POST, &format!("/sessions/{s}/replace"), Some(json!({ "from_lu": "fauteuil", "to_lu": "chaise" }))).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["changed"], json!(["u1", "u3"]));
    assert_eq!(v["replaced_nodes"], 2);
    for u in v["utterances"].as_array().unwrap() {
        assert_eq!(u["plain"], "Le professeur trouve une chaise.");
    }
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{s}"), None).await;
    assert_eq!(v["utterances"][1]["version"], 1);
    let (_, v) = call(&app, Method::POST, &format!("/sessions/{s}/replace"), Some(json!({ "from_lu": "absent", "to_lu": "chaise" }))).await;
    assert_eq!(v["changed"], json!([]));
}

#[tokio::test]
async fn on_demand_policy_defers_regeneration() {
    let app = app_with(None);
    let s = session(&app, &["cat-eats-mouse.unl"]).await;
    let (st, _) = call(&app, Method::PUT, &format!("/sessions/{s}/policy"), Some(json!({ "policy": "on-demand" }))).await;
    assert_eq!(st, StatusCode::OK);
    let uri = format!("/sessions/{s}/utterances/u1/nodes/2/attributes");
    let (_, v) = call(&app, Method::POST, &uri, Some(json!({ "name": "number", "value": "pl", "level": "interlingual" }))).await;
    assert_eq!(v["regenerated"], false);
    assert_eq!(v["complete"], false);
    let (_, v) = call(&app, Method::POST, &format!("/sessions/{s}/redeconvert"), None).await;
    assert_eq!(plain(&v, 0), "Les chats mangent la souris.");
    let (st, v) = call(&app, Method::PUT, &format!("/sessions/{s}/policy"), Some(json!({ "policy": "every-k", "k": 2 }))).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["policy"], json!({ "policy": "every-k", "k": 2 }));
}

#[tokio::test]
async fn style_edit_at_gma() {
    let app = app_with(None);
    let s = session(&app, &["army-destroys-city.unl"]).await;
    let uri = format!("/sessions/{s}/utterances/u1/nodes/1/attributes");
    let (st, v) = call(&app, Method::POST, &uri, Some(json!({ "name": "STYLE", "value": "NOMINAL", "level": "style" }))).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["plain"], "La destruction de la ville par l'armée.");
}

#[tokio::test]
async fn error_statuses() {
    let app = app_with(None);
    let (st, v) = call(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not-found");
    let (st, _) = call(&app, Method::POST, "/sessions", Some(json!({ "text": 1 }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = call(&app, Method::POST, "/sessions", Some(json!({ "document": "[unl]\nagt(a.@entry\n[/unl]\n" }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let doc = "[unl]\nagt(eat(icl>consume).@entry, cat(icl>animal))\nobj(dog(icl>animal), meat(icl>food))\n[/unl]\n";
    let (st, v) = call(&app, Method::POST, "/sessions", Some(json!({ "document": doc }))).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(v["utterances"][0]["validation"]["ok"], false);
    let s = v["session"].as_str().unwrap();
    let (st, v) = call(&app, Method::POST, &format!("/sessions/{s}/deconvert"), None).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["failures"][0]["id"], "u1");
    assert!(v["failures"][0]["report"]["issues"].as_array().is_some_and(|i| !i.is_empty()));
    let (st, _) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u1/tokens/1/trace"), None).await;
    assert_eq!(st, StatusCode::CONFLICT);

    let s = session(&app, &["cat-eats-mouse.unl"]).await;
    let (st, _) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u9"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, Method::POST, &format!("/sessions/{s}/utterances/u1/nodes/42/choose"), Some(json!({ "lu": "chat" }))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, Method::GET, &format!("/sessions/{s}/utterances/u1/nodes/x/candidates"), None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = std::env::temp_dir().join(format!("deconv-sessions-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let app = app_with(Some(dir.clone()));
    let s = session(&app, &["teacher-finds-chair.unl"]).await;
    call(&app, Method::POST, &format!("/sessions/{s}/utterances/u1/nodes/3/choose"), Some(json!({ "lu": "chaise" }))).await;
    let restarted = app_with(Some(dir.clone()));
    let (st, v) = call(&restarted, Method::GET, &format!("/sessions/{s}/utterances/u1"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["plain"], "Le professeur trouve une chaise.");
    std::fs::remove_dir_all(dir).unwrap();
}

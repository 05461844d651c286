use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use magfuse_service::http::router;
use magfuse_service::{Engine, Store};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

struct Client {
    app: axum::Router,
}

impl Client {
    fn new(engine: Engine) -> Self {
        Client {
            app: router(Arc::new(engine)),
        }
    }

    async fn call(&self, method: Method, uri: &str, body: impl Into<String>) -> (StatusCode, String) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.into()))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn json(&self, method: Method, uri: &str, body: impl Into<String>) -> (StatusCode, Value) {
        let (s, text) = self.call(method, uri, body).await;
        (s, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    async fn teach_s6(&self, verdict: &str) -> (StatusCode, Value) {
        let (_, resp) = self.json(Method::POST, "/parse", fixture("s6_tokens.json")).await;
        let id = resp["session"]["id"].as_str().unwrap().to_string();
        let (s, _) = self
            .json(
                Method::POST,
                &format!("/teach/{id}/roles"),
                json!({"roles": {"set": "verb", "to": "preposition", "15": "noun"}}).to_string(),
            )
            .await;
        assert_eq!(s, StatusCode::OK);
        let (s, _) = self
            .json(
                Method::POST,
                &format!("/teach/{id}/meaning"),
                json!({"meaning": {"action": "set", "object": "speaker_volume", "params": {"value": "<num>"}}})
                    .to_string(),
            )
            .await;
        assert_eq!(s, StatusCode::OK);
        self.json(
            Method::POST,
            &format!("/teach/{id}/confirm"),
            json!({ "verdict": verdict }).to_string(),
        )
        .await
    }
}

#[tokio::test]
async fn s2_frame_over_http() {
    let c = Client::new(Engine::seeded());
    let (s, resp) = c.json(Method::POST, "/parse", fixture("s2_tokens.json")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(resp["status"], "parsed");
    assert_eq!(
        resp["frame"],
        json!({"action": "turn on", "object": "temperature", "target_id": "hvac_icon", "params": {}})
    );
    assert_eq!(resp["tree"]["symbol"], "S");
    assert_eq!(resp["tree"]["attrs"]["val"], "turn on temperature");
}

#[tokio::test]
async fn s6_teach_flow_and_history() {
    let c = Client::new(Engine::seeded());
    let (s, resp) = c.json(Method::POST, "/parse", fixture("s6_tokens.json")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(resp["status"], "not_parseable");
    assert_eq!(resp["session"]["state"], "awaiting_roles");
    assert_eq!(resp["session"]["unknowns"], json!(["set", "to", "15"]));

    let (s, done) = c.teach_s6("confirm").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(done["state"], "committed");
    assert_eq!(done["pending_delta"], Value::Null);

    let (_, resp) = c.json(Method::POST, "/parse", fixture("s6_tokens.json")).await;
    assert_eq!(resp["frame"]["action"], "set");
    assert_eq!(resp["frame"]["params"]["value"], 15);
    assert_eq!(resp["frame"]["target_id"], "volume_icon");

    let (_, history) = c.json(Method::GET, "/grammar/history", "").await;
    assert_eq!(history.as_array().unwrap().len(), 1);
    assert_eq!(history[0]["pattern"], "set to <num>");
    assert_eq!(history[0]["session_id"], done["id"]);
}

#[tokio::test]
async fn reject_keeps_grammar() {
    let c = Client::new(Engine::seeded());
    let (_, before) = c.call(Method::GET, "/grammar", "").await;
    let (s, done) = c.teach_s6("reject").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(done["state"], "rejected");
    let (_, after) = c.call(Method::GET, "/grammar", "").await;
    assert_eq!(before, after);
    let (_, history) = c.json(Method::GET, "/grammar/history", "").await;
    assert_eq!(history, json!([]));
}

#[tokio::test]
async fn wrong_state_is_named() {
    let c = Client::new(Engine::seeded());
    let (_, resp) = c.json(Method::POST, "/parse", fixture("s6_tokens.json")).await;
    let id = resp["session"]["id"].as_str().unwrap();
    let (s, err) = c
        .json(Method::POST, &format!("/teach/{id}/confirm"), r#"{"verdict":"confirm"}"#)
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(err["error"], "wrong_state");
    assert_eq!(err["expected"], "awaiting_confirm");
    assert_eq!(err["actual"], "awaiting_roles");

    let (s, err) = c
        .json(Method::POST, &format!("/teach/{id}/roles"), r#"{"roles":{"set":"verb"}}"#)
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["tokens"], json!(["to", "15"]));

    let (s, _) = c
        .json(
            Method::POST,
            "/teach/00000000-0000-0000-0000-000000000000/roles",
            r#"{"roles":{}}"#,
        )
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_payloads() {
    let c = Client::new(Engine::seeded());
    let (s, err) = c.json(Method::POST, "/parse", r#"{"streams": [[], []]}"#).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "empty_input");
    let (s, err) = c.json(Method::POST, "/parse", r#"{"streams": [[{"value": 3}]]}"#).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "malformed");
    let inverted = json!({"streams": [[{"value": "help", "modality": "speech", "t_start": 9, "t_end": 1}]]});
    let (s, err) = c.json(Method::POST, "/parse", inverted.to_string()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "invalid_tokens");

    let dangling = json!({"streams": [
        [{"value": "play", "modality": "speech", "t_start": 0, "t_end": 300},
         {"value": "this", "modality": "speech", "t_start": 350, "t_end": 500}],
        [{"value": "blob", "modality": "gesture", "t_start": 400, "t_end": 600}]
    ]});
    let (s, err) = c.json(Method::POST, "/parse", dangling.to_string()).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "unresolvable_deictic");
    assert!(err["index"].is_number());
}

#[tokio::test]
async fn grammar_endpoints() {
    let c = Client::new(Engine::seeded());
    let (s, text) = c.call(Method::GET, "/grammar", "").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(text.lines().filter(|l| l.starts_with("prod ")).count(), 26);

    let (s, err) = c.json(Method::PUT, "/grammar", "start S\nprod X: S ->\n").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "grammar_syntax");
    let (s, err) = c.json(Method::PUT, "/grammar", fixture("bad.mag")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(!err["violations"].as_array().unwrap().is_empty());
    let (_, unchanged) = c.call(Method::GET, "/grammar", "").await;
    assert_eq!(unchanged, text);

    let smaller = text
        .lines()
        .filter(|l| !l.starts_with("prod P26:"))
        .collect::<Vec<_>>()
        .join("\n");
    let (s, body) = c.json(Method::PUT, "/grammar", smaller).await;
    assert_eq!(s, StatusCode::OK);
    assert!(body["fingerprint"].is_string());
    let (_, health) = c.json(Method::GET, "/health", "").await;
    assert_eq!(health["productions"], 25);
    assert_eq!(health["status"], "ok");
}

#[tokio::test]
async fn concurrent_sessions_serialize_at_confirm() {
    let engine = Arc::new(Engine::seeded());
    let streams: Vec<Vec<magfuse_core::lexicon::MultimodalToken>> =
        serde_json::from_str(&fixture("s6_tokens.json")).unwrap();
    let open = || {
        let id = engine.parse(&streams).unwrap().session().unwrap().id;
        let roles = [("set", "verb"), ("to", "preposition"), ("15", "noun")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
            .collect();
        engine.teach_roles(id, roles).unwrap();
        engine
            .teach_meaning(id, magfuse_core::command::CommandTemplate::new("set"))
            .unwrap();
        id
    };
    let (a, b) = (open(), open());
    assert_eq!(engine.teach_confirm(a, true).unwrap().state.as_str(), "committed");
    let err = engine.teach_confirm(b, true).unwrap_err();
    assert_eq!(err.code(), "stale_delta");
    assert_eq!(engine.session(b).unwrap().state.as_str(), "expired");
    assert_eq!(engine.history().len(), 1);
}

#[tokio::test]
async fn sessions_expire() {
    let engine = Engine::seeded().with_ttl(Duration::from_millis(0));
    let c = Client::new(engine);
    let (_, resp) = c.json(Method::POST, "/parse", fixture("s6_tokens.json")).await;
    let id = resp["session"]["id"].as_str().unwrap();
    std::thread::sleep(Duration::from_millis(5));
    let (s, err) = c
        .json(Method::POST, &format!("/teach/{id}/roles"), r#"{"roles":{}}"#)
        .await;
    assert_eq!(s, StatusCode::GONE);
    assert_eq!(err["error"], "session_expired");
}

#[tokio::test]
async fn commit_persists() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.mag");
    let c = Client::new(Engine::open(Store::new(&path)).unwrap());
    let (s, _) = c.teach_s6("confirm").await;
    assert_eq!(s, StatusCode::OK);
    assert!(path.exists());
    let store = Store::new(&path);
    assert!(store.meanings_path().exists());
    assert_eq!(store.history().unwrap().len(), 1);

    let restarted = Client::new(Engine::open(Store::new(&path)).unwrap());
    let (_, resp) = restarted.json(Method::POST, "/parse", fixture("s6_tokens.json")).await;
    assert_eq!(resp["frame"]["params"]["value"], 15);
    let (_, history) = restarted.json(Method::GET, "/grammar/history", "").await;
    assert_eq!(history.as_array().unwrap().len(), 1);
}

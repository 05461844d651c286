use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use magfuse_core::command::CommandTemplate;
use magfuse_core::grammar::SynRole;
use magfuse_core::lexicon::{LexiconError, MultimodalToken};
use magfuse_core::parser::ParseError;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use uuid::Uuid;

use crate::{Engine, EngineError};

impl EngineError {
    pub fn status(&self) -> StatusCode {
        use magfuse_core::learner::LearnError as L;
        match self {
            EngineError::Malformed(_)
            | EngineError::EmptyInput
            | EngineError::Parse(ParseError::EmptyInput) => StatusCode::BAD_REQUEST,
            EngineError::Lexicon(LexiconError::UnresolvableDeictic { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
            EngineError::Lexicon(_) => StatusCode::BAD_REQUEST,
            EngineError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            EngineError::SessionExpired(_) => StatusCode::GONE,
            EngineError::WrongState { .. }
            | EngineError::Learn(L::StaleDelta)
            | EngineError::Learn(L::AlreadyParseable) => StatusCode::CONFLICT,
            EngineError::Io { .. } | EngineError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for EngineError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        match &self {
            EngineError::Lexicon(LexiconError::UnresolvableDeictic { index }) => {
                body["index"] = json!(index);
            }
            EngineError::Learn(magfuse_core::learner::LearnError::MissingRoles(tokens)) => {
                body["tokens"] = json!(tokens);
            }
            EngineError::WrongState { expected, actual } => {
                body["expected"] = json!(expected);
                body["actual"] = json!(actual);
            }
            EngineError::InvalidGrammar(report) => {
                body["violations"] = json!(report
                    .violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>());
            }
            _ => {}
        }
        (self.status(), Json(body)).into_response()
    }
}

fn decode<T: DeserializeOwned>(body: &Bytes) -> Result<T, EngineError> {
    serde_json::from_slice(body).map_err(|e| EngineError::Malformed(e.to_string()))
}

/// `{"streams": [[token, ..], ..]}` or a bare array of streams.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum StreamsPayload {
    Wrapped { streams: Vec<Vec<MultimodalToken>> },
    Bare(Vec<Vec<MultimodalToken>>),
}

impl StreamsPayload {
    pub fn into_streams(self) -> Vec<Vec<MultimodalToken>> {
        match self {
            StreamsPayload::Wrapped { streams } | StreamsPayload::Bare(streams) => streams,
        }
    }
}

#[derive(Deserialize)]
struct RolesBody {
    roles: BTreeMap<String, SynRole>,
}

#[derive(Deserialize)]
struct MeaningBody {
    meaning: CommandTemplate,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Verdict {
    Confirm,
    Reject,
}

#[derive(Deserialize)]
struct ConfirmBody {
    verdict: Verdict,
}

type Shared = State<Arc<Engine>>;

async fn parse(State(engine): Shared, body: Bytes) -> Result<Response, EngineError> {
    let streams = decode::<StreamsPayload>(&body)?.into_streams();
    let resp = engine.parse(&streams)?;
    Ok(Json(resp).into_response())
}

async fn roles(State(engine): Shared, Path(id): Path<Uuid>, body: Bytes) -> Result<Response, EngineError> {
    let body: RolesBody = decode(&body)?;
    Ok(Json(engine.teach_roles(id, body.roles)?).into_response())
}

async fn meaning(State(engine): Shared, Path(id): Path<Uuid>, body: Bytes) -> Result<Response, EngineError> {
    let body: MeaningBody = decode(&body)?;
    Ok(Json(engine.teach_meaning(id, body.meaning)?).into_response())
}

async fn confirm(State(engine): Shared, Path(id): Path<Uuid>, body: Bytes) -> Result<Response, EngineError> {
    let body: ConfirmBody = decode(&body)?;
    Ok(Json(engine.teach_confirm(id, body.verdict == Verdict::Confirm)?).into_response())
}

async fn session(State(engine): Shared, Path(id): Path<Uuid>) -> Result<Response, EngineError> {
    Ok(Json(engine.session(id)?).into_response())
}

async fn get_grammar(State(engine): Shared) -> Response {
    (
        [(axum::http::header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        engine.grammar_text(),
    )
        .into_response()
}

async fn put_grammar(State(engine): Shared, body: Bytes) -> Result<Response, EngineError> {
    let text = std::str::from_utf8(&body).map_err(|e| EngineError::Malformed(e.to_string()))?;
    let fingerprint = engine.replace_grammar(text)?;
    Ok(Json(json!({ "fingerprint": fingerprint })).into_response())
}

async fn history(State(engine): Shared) -> Response {
    Json(engine.history()).into_response()
}

async fn health(State(engine): Shared) -> Response {
    let snap = engine.snapshot();
    Json(json!({
        "status": "ok",
        "fingerprint": snap.fingerprint,
        "productions": snap.grammar.productions.len(),
        "meanings": snap.registry.len(),
    }))
    .into_response()
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/parse", post(parse))
        .route("/teach/{id}", get(session))
        .route("/teach/{id}/roles", post(roles))
        .route("/teach/{id}/meaning", post(meaning))
        .route("/teach/{id}/confirm", post(confirm))
        .route("/grammar", get(get_grammar).put(put_grammar))
        .route("/grammar/history", get(history))
        .route("/health", get(health))
        .with_state(engine)
}
